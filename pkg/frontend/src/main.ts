import { SessionApi } from "./api.js";
import { SessionFlow, Side, ViewState } from "./flow.js";
import { renderCard } from "./render.js";

const api = new SessionApi("");
const flow = new SessionFlow(api);

const datasetSelect = document.getElementById("dataset") as HTMLSelectElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const epsSlider = document.getElementById("epsilon") as HTMLInputElement;
const epsValue = document.getElementById("epsilon-value") as HTMLSpanElement;
const startButton = document.getElementById("start") as HTMLButtonElement;
const clickCount = document.getElementById("click-count") as HTMLSpanElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const board = document.getElementById("board") as HTMLDivElement;

epsSlider.addEventListener("input", () => {
  epsValue.textContent = Number(epsSlider.value).toFixed(2);
});

startButton.addEventListener("click", () => {
  void flow.start(datasetSelect.value, modeSelect.value, Number(epsSlider.value));
});

function sideColumn(state: ViewState, side: Side): HTMLElement {
  const obj = side === "current" ? state.current : state.proposed;
  const col = document.createElement("div");
  col.className = "column";
  const title = document.createElement("h3");
  title.textContent = side === "current" ? "best so far" : "candidate";
  col.appendChild(title);
  if (obj) col.appendChild(renderCard(obj));
  const closer = document.createElement("button");
  closer.textContent = "closer to my target";
  closer.disabled = state.phase !== "active";
  closer.addEventListener("click", () => void flow.clickCloser(side));
  const found = document.createElement("button");
  found.textContent = "this is it!";
  found.className = "found";
  found.disabled = state.phase !== "active";
  found.addEventListener("click", () => void flow.clickFound(side));
  col.appendChild(closer);
  col.appendChild(found);
  return col;
}

flow.subscribe((state) => {
  clickCount.textContent = String(state.clicks);
  banner.textContent = state.banner ?? "";
  banner.className = state.phase === "error" ? "banner error" : "banner";
  board.replaceChildren();
  if (state.phase === "done") {
    const done = document.createElement("div");
    done.className = "completion";
    done.textContent = `Target located after ${state.finalCost} queries.`;
    board.appendChild(done);
    return;
  }
  if (state.current && state.proposed) {
    board.appendChild(sideColumn(state, "current"));
    board.appendChild(sideColumn(state, "proposed"));
  }
});

async function boot(): Promise<void> {
  try {
    const datasets = await api.listDatasets();
    datasetSelect.replaceChildren(
      ...datasets.map((d) => {
        const opt = document.createElement("option");
        opt.value = d.id;
        opt.textContent = `${d.name} (${d.size} objects)`;
        return opt;
      }),
    );
  } catch {
    banner.textContent = "service unreachable; is `navsearch serve` running?";
    banner.className = "banner error";
  }
}

void boot();

// Card rendering: a color swatch or a plotted point, straight from the
// server-supplied display payload.

import { ObjectView } from "./api.js";

export function renderCard(obj: ObjectView): HTMLElement {
  const card = document.createElement("div");
  card.className = "card-face";
  const d = obj.display;
  if (d.kind === "color" && typeof d.payload === "string") {
    const swatch = document.createElement("div");
    swatch.className = "swatch";
    swatch.style.backgroundColor = d.payload;
    card.appendChild(swatch);
    card.appendChild(label(d.payload));
  } else if (d.kind === "point" && Array.isArray(d.payload)) {
    const [x, y] = d.payload as [number, number];
    card.appendChild(pointPlot(x, y));
    card.appendChild(label(`(${x.toFixed(2)}, ${y.toFixed(2)})`));
  } else {
    card.appendChild(label(`object ${obj.id}`));
  }
  return card;
}

function label(text: string): HTMLElement {
  const el = document.createElement("div");
  el.className = "card-label";
  el.textContent = text;
  return el;
}

function pointPlot(x: number, y: number): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("viewBox", "0 0 100 100");
  svg.classList.add("point-plot");
  const frame = document.createElementNS(ns, "rect");
  frame.setAttribute("x", "1");
  frame.setAttribute("y", "1");
  frame.setAttribute("width", "98");
  frame.setAttribute("height", "98");
  frame.setAttribute("class", "plot-frame");
  svg.appendChild(frame);
  const dot = document.createElementNS(ns, "circle");
  dot.setAttribute("cx", String(5 + x * 90));
  dot.setAttribute("cy", String(95 - y * 90));
  dot.setAttribute("r", "4");
  dot.setAttribute("class", "plot-dot");
  svg.appendChild(dot);
  return svg;
}

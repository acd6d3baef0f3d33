// Typed client for the session service. All search logic lives server-side;
// this module only moves JSON.

export interface DisplayInfo {
  kind: "color" | "point" | "id";
  payload: unknown;
}

export interface ObjectView {
  id: number;
  display: DisplayInfo;
}

export interface PairView {
  session_id?: string;
  current: ObjectView;
  proposed: ObjectView;
  turn: number;
}

export interface DatasetInfo {
  id: string;
  name: string;
  size: number;
  display_kind: string;
}

export interface FoundAck {
  status: string;
  cost: number;
}

export interface SessionStats {
  cost: number;
  status: string;
  history_length: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(`${base}${path}`, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    throw new ApiError(res.status, `${init?.method ?? "GET"} ${path} -> ${res.status}`);
  }
  return (await res.json()) as T;
}

export class SessionApi {
  constructor(private base: string = "") {}

  listDatasets(): Promise<DatasetInfo[]> {
    return request(this.base, "/api/datasets");
  }

  createSession(datasetId: string, policyMode: string, epsilon: number): Promise<PairView> {
    return request(this.base, "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ dataset_id: datasetId, policy_mode: policyMode, epsilon }),
    });
  }

  answer(sessionId: string, choice: "current" | "proposed", turn: number): Promise<PairView> {
    return request(this.base, `/api/sessions/${sessionId}/answer`, {
      method: "POST",
      body: JSON.stringify({ choice, turn }),
    });
  }

  markFound(sessionId: string, objectId: number): Promise<FoundAck> {
    return request(this.base, `/api/sessions/${sessionId}/found`, {
      method: "POST",
      body: JSON.stringify({ object_id: objectId }),
    });
  }

  stats(sessionId: string): Promise<SessionStats> {
    return request(this.base, `/api/sessions/${sessionId}/stats`);
  }
}

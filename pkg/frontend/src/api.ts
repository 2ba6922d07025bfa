import type {
  ApiError,
  NetworkDescription,
  RoundOutcome,
  SessionInfo,
  SessionSummary,
} from './types.js';

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

const asError = async (res: Response): Promise<ServiceError> => {
  let body: ApiError = { code: 'http_error', message: `HTTP ${res.status}` };
  try {
    const parsed = await res.json();
    if (parsed && typeof parsed.message === 'string') body = parsed;
    else if (parsed && parsed.detail) body = { code: 'http_error', message: JSON.stringify(parsed.detail) };
  } catch {
    /* non-JSON error body: keep the generic message */
  }
  return new ServiceError(res.status, body);
};

export class SessionApi {
  constructor(private readonly base: string = '') {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!res.ok) throw await asError(res);
    return (await res.json()) as T;
  }

  fetchNetwork(name: string): Promise<NetworkDescription> {
    return this.request(`/networks/${name}`);
  }

  createSession(network: string, unitBudget: number, rounds: number, seed: number): Promise<SessionInfo> {
    return this.request('/sessions', {
      method: 'POST',
      body: JSON.stringify({ network, unit_budget: unitBudget, rounds, seed }),
    });
  }

  submitRound(sessionId: string, round: number, allocation: Record<string, number>): Promise<RoundOutcome> {
    return this.request(`/sessions/${sessionId}/rounds/${round}`, {
      method: 'POST',
      body: JSON.stringify({ allocation }),
    });
  }

  fetchSession(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  fetchSummary(sessionId: string): Promise<SessionSummary> {
    return this.request(`/sessions/${sessionId}/summary`);
  }
}

export interface NetworkEdge {
  from: string;
  to: string;
  p0: number;
  s: number;
}

export interface NetworkNode {
  id: string;
  label: string;
  kind: 'intermediate' | 'source' | 'critical';
}

export interface NetworkDescription {
  name: string;
  nodes: NetworkNode[];
  edges: NetworkEdge[];
  sources: string[];
  critical_assets: { node: string; loss: number; owners: string[] }[];
  unit_budget_default: number;
  critical_edge?: string;
  cross_over_edge?: string;
}

export interface RoundOutcome {
  outcome: 'compromised' | 'defended';
  path: string[];
  round: number;
  status: 'active' | 'complete';
  next_round: number | null;
}

export interface SessionInfo {
  id: string;
  network: string;
  unit_budget: number;
  total_rounds: number;
  seed: number;
  status: 'active' | 'complete';
  completed_rounds: number;
}

export interface SessionSummary {
  session_id: string;
  network: string;
  alpha_hat: number;
  eta_hat: number;
  residual: number;
  per_round_alpha: number[];
  trend: 'improving' | 'static' | 'worsening';
  defended_count: number;
  outcomes: string[];
  paid_round: number;
  paid_round_defended: boolean;
}

export interface ApiError {
  code: string;
  message: string;
}

export const edgeName = (from: string, to: string): string => `${from}->${to}`;

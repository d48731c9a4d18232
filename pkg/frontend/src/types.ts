/** Documents exchanged with the workbench service (canonical field order). */

export interface ViewNode {
  id: string;
  vars: Record<string, string>;
  initial: boolean;
  terminal: boolean;
  violating: boolean;
  violated: string[];
  depth: number;
  rank: number;
  folded: boolean;
  hidden: number;
  stubs: number;
}

export interface ViewEdge {
  from: string;
  to: string;
  action: string;
}

export interface TreeIndexEntry {
  index: number;
  root: string;
  vars: Record<string, string>;
  size: number;
}

export interface GraphViewDoc {
  tree: number;
  truncated: boolean;
  nodes: ViewNode[];
  edges: ViewEdge[];
  trees: TreeIndexEntry[];
  view: { active_tree: number; folded: string[]; depth_limit: number };
}

export interface SourceLocationDoc {
  module: string;
  start_line: number;
  start_col: number;
  end_line: number;
  end_col: number;
}

export interface RunStatsDoc {
  states_generated: number;
  distinct_states: number;
  depth: number;
}

export interface TlcErrorDoc {
  category: string;
  property: string | null;
  message: string;
  locations: SourceLocationDoc[];
  trace: unknown;
}

export interface RunDoc {
  run_id: number;
  status: 'queued' | 'running' | 'done' | 'failed' | 'cancelled' | 'timeout';
  result: {
    status: string;
    exit_status: number;
    wall_time_ms: number;
    stats: RunStatsDoc;
    error: TlcErrorDoc | null;
  } | null;
  note?: string;
  error?: string;
}

export interface RepairAttemptDoc {
  index: number;
  input_spec_hash: string;
  patch_status: 'applied' | 'extract_failed' | 'name_mismatch';
  verdict: 'clean' | 'still_failing' | 'not_run';
  patched_spec: string | null;
  recheck: { error: TlcErrorDoc | null } | null;
  response: string;
}

export interface RepairDoc {
  mode: string;
  max_passes?: number;
  final_status: string | null;
  abort_reason?: string | null;
  accepted?: boolean;
  attempts: RepairAttemptDoc[];
}

export interface DigestDoc {
  model: string;
  created_at: string;
  selection_echo: string | null;
  summary: {
    initial: string[];
    terminal: string[];
    cycles: string[][];
    actions: { action: string; count: number }[];
    nodes: number;
    edges: number;
  };
  explanation: Record<string, string>;
}

export interface ErrorBody {
  code: string;
  message: string;
}

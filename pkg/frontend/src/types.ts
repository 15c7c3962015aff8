// Wire types mirroring the service's JSON bodies. The UI never derives its
// own numbers from these; everything shown comes straight off the snapshot.

export type Stage = 'created' | 'decomposed' | 'attributed' | 'resolved';

export type Dimension =
  | 'pif'
  | 'cfm'
  | 'task_and_error_measure'
  | 'pif_measure'
  | 'other_pifs_and_uncertainty';

export const DIMENSIONS: Dimension[] = [
  'pif',
  'cfm',
  'task_and_error_measure',
  'pif_measure',
  'other_pifs_and_uncertainty',
];

export const DIMENSION_LABELS: Record<Dimension, string> = {
  pif: 'PIF',
  cfm: 'CFM',
  task_and_error_measure: 'Task (and error measure)',
  pif_measure: 'PIF measure',
  other_pifs_and_uncertainty: 'Other PIFs (and uncertainty)',
};

export const CFM_CODES = ['D', 'U', 'DM', 'E', 'T'] as const;

export const TABLE_OPTIONS = [
  { code: 'SF', label: 'Scenario familiarity' },
  { code: 'IAR', label: 'Information availability and reliability' },
  { code: 'TC', label: 'Task complexity' },
] as const;

export const SHOT_OPTIONS = [0, 1, 3, 5] as const;

export interface AgentReport {
  kind: string;
  sections: Record<string, string>;
  raw_text: string;
}

export interface Candidates {
  pif: string[];
  cfm: string[][];
  task_and_error_measure: string[];
  pif_measure: string[];
  other_pifs_and_uncertainty: string[];
  warnings: string[];
}

export interface ResolvedAttrs {
  pif: string;
  cfm: string[];
  task_and_error_measure: string;
  pif_measure: string;
  other_pifs_and_uncertainty: string;
  provenance: Record<Dimension, string>;
}

export interface RankedMatch {
  rank: number;
  entry_id: string;
  score: number;
  error_rate: number;
  breakdown: Record<string, number>;
}

export interface Resolution {
  ranked_matches: RankedMatch[];
  base_hep: number;
}

export interface AuditEntry {
  ts: number;
  actor: string;
  action: string;
  digest: string;
  payload?: { error?: string; raw_text?: string } | null;
}

export interface SessionSnapshot {
  session_id: string;
  case: { data_source_text: string; table: string };
  stage: Stage;
  shots: number;
  ablation: boolean;
  exclude_reference: string | null;
  prompt_version: string;
  reports: AgentReport[] | null;
  candidates: Candidates | null;
  resolved_attrs: ResolvedAttrs | null;
  resolution: Resolution | null;
  shot_ids: string[] | null;
  timings: Record<string, number>;
  audit_log: AuditEntry[];
}

export interface TableInfo {
  table: string;
  label: string;
  entry_count: number;
}

export interface EditPayload {
  pif?: string;
  cfm?: string[];
  task_and_error_measure?: string;
  pif_measure?: string;
  other_pifs_and_uncertainty?: string;
}

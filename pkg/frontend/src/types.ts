// Wire types mirroring the service's documented JSON schemas.

export interface TreeNodeDoc {
  id: string;
  level: 'root' | 'entity' | 'action' | 'status';
  label: string;
  children: TreeNodeDoc[];
  template_id?: string;
}

export interface BranchingDoc {
  max: number;
  mean: number;
}

export interface TreeStatsDoc {
  entity_count: number;
  action_count: number;
  status_count: number;
  template_count: number;
  branching: Record<string, BranchingDoc>;
}

export interface TreeDoc {
  schema: string;
  root: TreeNodeDoc;
  stats: TreeStatsDoc;
}

export type SegmentLevel = 'S' | 'A' | 'E';
export type SequenceLabel = 'Normal' | 'Anomaly';

export interface SegmentDoc {
  level: SegmentLevel;
  parent_id: string;
  parent_path: string[];
  node_ids: string[];
  node_labels: string[];
  span: [number, number];
  rendered: string;
}

export interface DecompositionDoc {
  schema: string;
  sequence_id: string;
  events: string[];
  status_segments: SegmentDoc[];
  action_segments: SegmentDoc[];
  entity_segments: SegmentDoc[];
}

export interface VerdictDoc {
  key: string;
  level: SegmentLevel;
  rendered: string;
  label: SequenceLabel;
  method: string;
  explanation: string;
  llm_called: boolean;
}

export interface AnomalousSegmentDoc {
  key: string;
  level: SegmentLevel;
  rendered: string;
  span: [number, number];
  template_ids: string[];
}

export interface ReportDoc {
  schema: string;
  sequence_id: string;
  final_label: SequenceLabel;
  explanation: string;
  trace: VerdictDoc[];
  llm_call_count: number;
  levels_completed: SegmentLevel[];
  anomalous_segment: AnomalousSegmentDoc | null;
}

export interface EntryDoc {
  key: string;
  level: SegmentLevel;
  parent_path: string[];
  node_labels: string[];
  rendered: string;
  label: SequenceLabel;
  explanation: string;
  provenance: string;
  frequency: number;
  source_sequence_ids: string[];
  override_note: string | null;
}

export interface NodeSummaryDoc {
  node_path: string[];
  entries_by_level: Record<string, number>;
  normal_count: number;
  anomaly_count: number;
  total_frequency: number;
}

export interface SequenceInfo {
  sequence_id: string;
  length: number;
  label: SequenceLabel | null;
}

export interface CorporaDoc {
  [name: string]: { split: 'Train' | 'Test'; sequences: number };
}

export interface TrainStatusDoc {
  state: 'idle' | 'running' | 'done' | 'error';
  job_id?: string;
  done?: number;
  total?: number;
  report?: { sequences: number; new_entries: number; total_observations: number } | null;
  error?: { code: string; message: string } | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

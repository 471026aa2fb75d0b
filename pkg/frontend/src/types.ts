/** JSON shapes served by the session API, mirrored field-for-field. */

export type Scalar = string | number;

/** A group-by key: one value per attribute of the view's column order. */
export type GroupKey = Scalar[];

export interface StatsJson {
  count: number;
  sum: number;
  mean: number | null;
  std: number | null;
}

export interface GroupRow extends StatsJson {
  key: GroupKey;
}

export interface AuxiliaryLayer {
  name: string;
  attribute: string;
  measure: string;
  /** One value per view group, aligned with `ViewPayload.groups`. */
  values: (number | null)[];
}

export interface PathStep {
  hierarchy: string;
  group: GroupKey;
}

export interface ViewPayload {
  session: string;
  order: string[];
  filter: Record<string, Scalar>;
  drilled: string | null;
  path: PathStep[];
  aggregates: string[];
  measure: string | null;
  groups: GroupRow[];
  auxiliaries: AuxiliaryLayer[];
}

export interface HierarchyInfo {
  name: string;
  attributes: string[];
}

export interface DatasetInfo {
  id: string;
  hierarchies: HierarchyInfo[];
  measures: string[];
  rows: number;
  auxiliaries: string[];
}

export interface SessionPayload {
  session: string;
  view: ViewPayload;
}

export interface ComplaintRecord {
  group: GroupKey;
  stat: string;
  direction: string;
  target_value: number | null;
  current_value: number | null;
}

export interface Candidate {
  hierarchy: string;
  group: GroupKey;
  actual: StatsJson;
  repaired: StatsJson;
  repaired_value: number;
  score: number;
}

export interface Ranking {
  hierarchy: string;
  attribute: string;
  order: string[];
  highlight_keys: GroupKey[];
  candidates: Candidate[];
}

export interface RecommendationPayload {
  complaint: {
    group: GroupKey;
    stat: string;
    direction: string;
    target_value: number | null;
  };
  current_value: number | null;
  best: Candidate;
  rankings: Ranking[];
}

export interface RecordsPayload {
  group: GroupKey;
  rows: Record<string, Scalar>[];
}

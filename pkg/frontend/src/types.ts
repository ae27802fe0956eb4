/** JSON payload shapes of the draft assistant's /v1 HTTP API.
 *
 * These mirror the service responses field for field; the UI renders the
 * values verbatim (rounding only at render time) and never derives or
 * re-sorts anything the service already decided.
 */

export type Team = "blue" | "purple";

export type StrategyName = "p" | "v" | "p+v";

export interface CheckpointInfo {
  name: string;
  digest: string;
  hidden_dim: number;
  history_length: number;
}

export interface MetaPayload {
  champions: string[];
  roles: string[];
  feature_names: string[];
  checkpoints: CheckpointInfo[];
  default_checkpoint: string;
  num_turns: number;
  /** Team acting at each turn, index 0 = turn 1 (the 1-2-2-2-2-1 order). */
  turn_teams: Team[];
  defaults: { strategy: StrategyName; tau: number; k: number };
  player_directory: boolean;
}

export interface SlotPayload {
  turn: number;
  team: Team;
  champion: string | null;
  role: string | null;
  player: string | null;
  known_history: boolean;
}

export interface PickPayload {
  turn: number;
  team: Team;
  champion: string;
}

export interface WinProbPayload {
  blue: number;
  purple: number;
  /** Whose perspective `value` is from (acting team; Blue once complete). */
  team: Team;
  value: number;
}

export interface StatePayload {
  session_id: string;
  checkpoint: string;
  complete: boolean;
  turn: number | null;
  acting_team: Team | null;
  bans: string[];
  picks: PickPayload[];
  slots: SlotPayload[];
  win_prob: WinProbPayload;
}

export interface ExplanationPayload {
  synergy_champion: string | null;
  synergy_weight: number | null;
  counter_champion: string | null;
  counter_weight: number | null;
}

export interface RecommendationCard {
  champion: string;
  champion_id: number;
  select_prob: number;
  win_prob: number;
  passed_threshold: boolean;
  explanation?: ExplanationPayload;
}

export interface RecommendationsPayload {
  session_id: string;
  turn: number;
  acting_team: Team;
  strategy: StrategyName;
  tau: number;
  k: number;
  model_version: string;
  legal_count: number;
  recommendations: RecommendationCard[];
}

export interface CreateSessionResponse {
  session_id: string;
  state: StatePayload;
}

export interface HistoryEntryBody {
  champion: string;
  role?: string | null;
  features: number[];
}

export interface SlotBody {
  player_id?: string | null;
  role?: string | null;
  history?: HistoryEntryBody[] | null;
}

export interface CreateSessionBody {
  checkpoint?: string | null;
  bans: string[];
  slots: SlotBody[];
}

export interface PickBody {
  turn: number;
  champion: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  field?: string;
}

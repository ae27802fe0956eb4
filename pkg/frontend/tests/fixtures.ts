/** In-memory stub of the draft assistant's /v1 API, installed as a fetch
 * replacement. It mirrors the real service's payload shapes and error
 * codes deterministically so tests can assert that the UI renders service
 * data verbatim. It also keeps a request log so tests can assert exactly
 * which calls each user action produced.
 */

import type {
  CreateSessionBody,
  MetaPayload,
  RecommendationCard,
  RecommendationsPayload,
  StatePayload,
  StrategyName,
  Team,
} from "../src/types.js";

export const CHAMPIONS = [
  "Aurelion", "Brand", "Caitlyn", "Darius", "Ekko", "Fiora", "Gnar",
  "Hecarim", "Irelia", "Jinx", "Karma", "Leona", "Morgana", "Nasus",
  "Olaf", "Poppy",
] as const;

export const ROLES = ["top", "jungle", "mid", "bottom", "support"] as const;

export const TURN_TEAMS: Team[] = [
  "blue", "purple", "purple", "blue", "blue",
  "purple", "purple", "blue", "blue", "purple",
];

export const MODEL_VERSION = "main@fix123456789";

interface FxSlot {
  player: string | null;
  role: string | null;
  knownHistory: boolean;
}

interface FxSession {
  id: string;
  bans: string[]; // sorted by champion id, like the real service
  picks: string[];
  slots: FxSlot[];
}

export interface LoggedRequest {
  method: string;
  path: string;
  query: Record<string, string>;
  body?: unknown;
}

interface Scored {
  champion: string;
  id: number;
  select: number;
  win: number;
}

function jsonResponse(status: number, body: unknown): Response {
  // Serialize eagerly: responses are plain JSON and callers must never be
  // able to mutate fixture state through a shared reference.
  const raw = JSON.stringify(body);
  return {
    ok: status < 400,
    status,
    json: async () => JSON.parse(raw) as unknown,
  } as unknown as Response;
}

export class FixtureService {
  sessions = new Map<string, FxSession>();
  log: LoggedRequest[] = [];
  /** When true every request rejects like a dead connection. */
  offline = false;
  /** One-shot injected pick failure (simulates a server-side rejection). */
  failNextPick: { status: number; code: string; message: string } | null = null;
  private nextId = 1;

  // -- plumbing -------------------------------------------------------------

  install(): () => void {
    const previous = globalThis.fetch;
    globalThis.fetch = this.fetch as typeof globalThis.fetch;
    return () => {
      globalThis.fetch = previous;
    };
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.offline) {
      throw new TypeError("fixture network down");
    }
    const raw = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const url = new URL(raw, "http://fixture.local");
    const method = (init?.method ?? "GET").toUpperCase();
    const query: Record<string, string> = {};
    url.searchParams.forEach((value, key) => {
      query[key] = value;
    });
    let body: unknown;
    if (init?.body !== undefined && init?.body !== null) {
      body = JSON.parse(String(init.body));
    }
    this.log.push({ method, path: url.pathname, query, body });
    return this.route(method, url.pathname, query, body);
  };

  requests(method: string, pathSuffix: string): LoggedRequest[] {
    return this.log.filter((r) => r.method === method && r.path.endsWith(pathSuffix));
  }

  // -- routing --------------------------------------------------------------

  private route(
    method: string,
    path: string,
    query: Record<string, string>,
    body: unknown,
  ): Response {
    if (method === "GET" && path === "/v1/meta") {
      return jsonResponse(200, this.metaPayload());
    }
    if (method === "POST" && path === "/v1/sessions") {
      return this.createSession(body as CreateSessionBody);
    }
    let m = path.match(/^\/v1\/sessions\/([^/]+)\/state$/);
    if (m && method === "GET") {
      const session = this.sessions.get(decodeURIComponent(m[1]!));
      if (!session) {
        return jsonResponse(404, { code: "unknown_session", message: "no such session" });
      }
      return jsonResponse(200, this.statePayload(session.id));
    }
    m = path.match(/^\/v1\/sessions\/([^/]+)\/picks$/);
    if (m && method === "POST") {
      return this.applyPick(decodeURIComponent(m[1]!), body as { turn: number; champion: string });
    }
    m = path.match(/^\/v1\/sessions\/([^/]+)\/recommendations$/);
    if (m && method === "GET") {
      return this.recommendations(decodeURIComponent(m[1]!), query);
    }
    return jsonResponse(404, { code: "not_found", message: `no route ${method} ${path}` });
  }

  // -- endpoint logic -------------------------------------------------------

  metaPayload(): MetaPayload {
    return {
      champions: [...CHAMPIONS],
      roles: [...ROLES],
      feature_names: ["winrate", "score", "kda"],
      checkpoints: [
        { name: "main", digest: "fix123456789", hidden_dim: 32, history_length: 10 },
      ],
      default_checkpoint: "main",
      num_turns: 10,
      turn_teams: [...TURN_TEAMS],
      defaults: { strategy: "p+v", tau: 0.02, k: 3 },
      player_directory: true,
    };
  }

  private createSession(body: CreateSessionBody): Response {
    if (!Array.isArray(body.slots) || body.slots.length !== 10) {
      return jsonResponse(400, {
        code: "bad_slots",
        message: `exactly 10 slot bindings required, got ${body.slots?.length ?? 0}`,
        field: "slots",
      });
    }
    const banIds: number[] = [];
    for (const [i, name] of (body.bans ?? []).entries()) {
      const id = (CHAMPIONS as readonly string[]).indexOf(name);
      if (id < 0) {
        return jsonResponse(400, {
          code: "unknown_champion",
          message: `unknown champion ${name}`,
          field: `bans[${i}]`,
        });
      }
      banIds.push(id);
    }
    if (new Set(banIds).size !== banIds.length) {
      return jsonResponse(400, {
        code: "duplicate_ban", message: "bans contain duplicates", field: "bans",
      });
    }
    const session: FxSession = {
      id: `fx${String(this.nextId++).padStart(4, "0")}`,
      bans: [...banIds].sort((a, b) => a - b).map((i) => CHAMPIONS[i]!),
      picks: [],
      slots: body.slots.map((slot) => ({
        player: slot.player_id ?? null,
        role: slot.role ?? null,
        knownHistory: slot.player_id != null || slot.history != null,
      })),
    };
    this.sessions.set(session.id, session);
    return jsonResponse(201, {
      session_id: session.id,
      state: this.statePayload(session.id),
    });
  }

  private applyPick(id: string, body: { turn: number; champion: string }): Response {
    const session = this.sessions.get(id);
    if (!session) {
      return jsonResponse(404, { code: "unknown_session", message: "no such session" });
    }
    if (this.failNextPick) {
      const fail = this.failNextPick;
      this.failNextPick = null;
      return jsonResponse(fail.status, { code: fail.code, message: fail.message });
    }
    if (session.picks.length >= 10) {
      return jsonResponse(409, { code: "complete", message: "draft already has all ten picks" });
    }
    const cursor = session.picks.length + 1;
    if (body.turn !== cursor) {
      return jsonResponse(409, {
        code: "out_of_turn",
        message: `it is turn ${cursor}, not turn ${body.turn}`,
        field: "turn",
      });
    }
    if (!(CHAMPIONS as readonly string[]).includes(body.champion)) {
      return jsonResponse(422, {
        code: "unknown_champion",
        message: `unknown champion ${body.champion}`,
        field: "champion",
      });
    }
    if (session.bans.includes(body.champion)) {
      return jsonResponse(422, { code: "banned", message: `champion ${body.champion} is banned` });
    }
    if (session.picks.includes(body.champion)) {
      return jsonResponse(422, { code: "taken", message: `champion ${body.champion} is already picked` });
    }
    session.picks.push(body.champion);
    return jsonResponse(200, this.statePayload(session.id));
  }

  private recommendations(id: string, query: Record<string, string>): Response {
    const session = this.sessions.get(id);
    if (!session) {
      return jsonResponse(404, { code: "unknown_session", message: "no such session" });
    }
    if (session.picks.length >= 10) {
      return jsonResponse(409, { code: "complete", message: "draft is complete; nothing to recommend" });
    }
    const strategy = (query.strategy ?? "p+v") as StrategyName;
    if (!["p", "v", "p+v"].includes(strategy)) {
      return jsonResponse(400, { code: "bad_strategy", message: `unknown strategy ${strategy}`, field: "strategy" });
    }
    const tau = query.tau !== undefined ? Number(query.tau) : 0.02;
    const k = query.k !== undefined ? Number(query.k) : 3;
    return jsonResponse(200, this.recsPayload(session.id, strategy, tau, k));
  }

  // -- deterministic payload builders (also the tests' expected values) -----

  winBlue(numPicks: number): number {
    return 0.47 + 0.011 * numPicks;
  }

  statePayload(id: string): StatePayload {
    const session = this.sessions.get(id);
    if (!session) throw new Error(`fixture: no session ${id}`);
    const complete = session.picks.length >= 10;
    const turn = complete ? null : session.picks.length + 1;
    const acting: Team | null = turn === null ? null : TURN_TEAMS[turn - 1]!;
    const perspective: Team = acting ?? "blue";
    const blue = this.winBlue(session.picks.length);
    return {
      session_id: session.id,
      checkpoint: "main",
      complete,
      turn,
      acting_team: acting,
      bans: [...session.bans],
      picks: session.picks.map((champion, i) => ({
        turn: i + 1,
        team: TURN_TEAMS[i]!,
        champion,
      })),
      slots: Array.from({ length: 10 }, (_, i) => {
        const slot = session.slots[i]!;
        return {
          turn: i + 1,
          team: TURN_TEAMS[i]!,
          champion: session.picks[i] ?? null,
          role: slot.role,
          player: slot.player,
          known_history: slot.knownHistory,
        };
      }),
      win_prob: {
        blue,
        purple: 1 - blue,
        team: perspective,
        value: perspective === "blue" ? blue : 1 - blue,
      },
    };
  }

  /** Candidates scored deterministically from (champion id, turn); the
   * lowest behavior scores sit below the default τ so padding cards occur. */
  private scored(session: FxSession): Scored[] {
    const turn = session.picks.length + 1;
    const legal = CHAMPIONS.map((champion, id) => ({ champion, id })).filter(
      ({ champion }) =>
        !session.bans.includes(champion) && !session.picks.includes(champion),
    );
    const n = legal.length;
    const byBehavior = [...legal].sort((a, b) => {
      const ka = (a.id * 7 + turn * 3) % 101;
      const kb = (b.id * 7 + turn * 3) % 101;
      return ka - kb || a.id - b.id;
    });
    const byValue = [...legal].sort((a, b) => {
      const ka = (a.id * 5 + turn * 11) % 103;
      const kb = (b.id * 5 + turn * 11) % 103;
      return ka - kb || a.id - b.id;
    });
    const selectOf = new Map<number, number>();
    byBehavior.forEach(({ id }, rank) => {
      selectOf.set(id, 0.001 + 0.0237 * (n - 1 - rank));
    });
    const winOf = new Map<number, number>();
    byValue.forEach(({ id }, rank) => {
      winOf.set(id, 0.41293 + 0.01382 * (n - 1 - rank));
    });
    return legal.map(({ champion, id }) => ({
      champion,
      id,
      select: selectOf.get(id)!,
      win: winOf.get(id)!,
    }));
  }

  recsPayload(
    id: string,
    strategy: StrategyName,
    tau: number,
    k: number,
  ): RecommendationsPayload {
    const session = this.sessions.get(id);
    if (!session) throw new Error(`fixture: no session ${id}`);
    const turn = session.picks.length + 1;
    const acting = TURN_TEAMS[turn - 1]!;
    const scored = this.scored(session);
    let ordered: { entry: Scored; passed: boolean }[];
    if (strategy === "p") {
      ordered = [...scored]
        .sort((a, b) => b.select - a.select || a.id - b.id)
        .map((entry) => ({ entry, passed: entry.select > tau }));
    } else if (strategy === "v") {
      ordered = [...scored]
        .sort((a, b) => b.win - a.win || b.select - a.select || a.id - b.id)
        .map((entry) => ({ entry, passed: entry.select > tau }));
    } else {
      const passers = scored.filter((s) => s.select > tau);
      const rest = scored.filter((s) => s.select <= tau);
      passers.sort((a, b) => b.win - a.win || b.select - a.select || a.id - b.id);
      rest.sort((a, b) => b.select - a.select || a.id - b.id);
      ordered = [
        ...passers.map((entry) => ({ entry, passed: true })),
        ...rest.map((entry) => ({ entry, passed: false })),
      ];
    }
    const allyPicks = session.picks.filter((_, i) => TURN_TEAMS[i] === acting);
    const enemyPicks = session.picks.filter((_, i) => TURN_TEAMS[i] !== acting);
    const cards: RecommendationCard[] = ordered.slice(0, k).map(({ entry, passed }, rank) => {
      const card: RecommendationCard = {
        champion: entry.champion,
        champion_id: entry.id,
        select_prob: entry.select,
        win_prob: entry.win,
        passed_threshold: passed,
      };
      const synergy = allyPicks.length > 0 ? allyPicks[allyPicks.length - 1]! : null;
      const counter = enemyPicks.length > 0 ? enemyPicks[enemyPicks.length - 1]! : null;
      if (synergy !== null || counter !== null) {
        card.explanation = {
          synergy_champion: synergy,
          synergy_weight: synergy !== null ? 0.61234 - 0.01 * rank : null,
          counter_champion: counter,
          counter_weight: counter !== null ? 0.40517 - 0.01 * rank : null,
        };
      }
      return card;
    });
    return {
      session_id: session.id,
      turn,
      acting_team: acting,
      strategy,
      tau,
      k,
      model_version: MODEL_VERSION,
      legal_count: scored.length,
      recommendations: cards,
    };
  }
}

/** Drain the resolved-promise chains behind fire-and-forget UI handlers. */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

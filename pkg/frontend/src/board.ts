/** DOM builders for the draft board.
 *
 * Every renderer is a pure function of API payloads plus callbacks; no
 * recommendation or legality logic lives here beyond disabling what the
 * state payload already marks banned or taken.
 */

import { barWidth, percent, teamLabel } from "./format.js";
import type {
  MetaPayload,
  RecommendationCard,
  RecommendationsPayload,
  StatePayload,
  StrategyName,
  Team,
} from "./types.js";

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

// ---------------------------------------------------------------------------
// draft board

export function renderTurnBanner(state: StatePayload, numTurns: number): HTMLElement {
  if (state.complete || state.turn === null || state.acting_team === null) {
    return el("div", { class: "turn-banner complete", "data-role": "turn-banner" },
      "Draft complete");
  }
  return el(
    "div",
    { class: `turn-banner team-${state.acting_team}`, "data-role": "turn-banner" },
    `Turn ${state.turn} of ${numTurns} — ${teamLabel(state.acting_team)} picking`,
  );
}

export function renderBanStrip(bans: string[]): HTMLElement {
  const strip = el("div", { class: "ban-strip", "data-role": "ban-strip" });
  strip.append(el("span", { class: "ban-strip-label" }, "Bans"));
  if (bans.length === 0) {
    strip.append(el("span", { class: "ban-none" }, "none"));
  }
  for (const name of bans) {
    strip.append(el("span", { class: "ban-chip", "data-ban": name }, name));
  }
  return strip;
}

function renderSlot(slot: StatePayload["slots"][number], acting: boolean): HTMLElement {
  const picked = slot.champion !== null;
  const classes = ["slot", `team-${slot.team}`];
  if (acting) classes.push("picking");
  if (picked) classes.push("filled");
  const node = el("div", { class: classes.join(" "), "data-slot": String(slot.turn) });
  node.append(
    el("div", { class: "slot-portrait" }, picked ? slot.champion!.charAt(0).toUpperCase() : "?"),
  );
  const details = el("div", { class: "slot-details" });
  details.append(
    el("div", { class: "slot-champion" }, slot.champion ?? (acting ? "picking now…" : "—")),
  );
  const player = slot.player ?? "unknown player";
  const role = slot.role ?? "unknown role";
  details.append(el("div", { class: "slot-player" }, `${player} · ${role}`));
  node.append(details);
  node.append(el("div", { class: "slot-turn" }, `T${slot.turn}`));
  return node;
}

/** Two five-slot team columns; exactly the acting slot is highlighted. */
export function renderTeams(state: StatePayload): HTMLElement {
  const wrap = el("div", { class: "teams", "data-role": "teams" });
  for (const team of ["blue", "purple"] as Team[]) {
    const column = el(
      "div",
      { class: `team-column team-${team}`, "data-team": team },
      el("h3", {}, `${teamLabel(team)} team`),
    );
    for (const slot of state.slots) {
      if (slot.team !== team) continue;
      column.append(renderSlot(slot, !state.complete && slot.turn === state.turn));
    }
    wrap.append(column);
  }
  return wrap;
}

export interface GaugeRefs {
  root: HTMLElement;
  valueEl: HTMLElement;
  labelEl: HTMLElement;
  fillEl: HTMLElement;
}

/** Win gauge for the acting team; the app mutates it on hover previews. */
export function renderGauge(state: StatePayload): GaugeRefs {
  const valueEl = el("span", { class: "gauge-value", "data-role": "gauge-value" },
    percent(state.win_prob.value));
  const labelEl = el("span", { class: "gauge-label", "data-role": "gauge-label" },
    `${teamLabel(state.win_prob.team)} win chance`);
  const fillEl = el("div", { class: "gauge-fill", "data-role": "gauge-fill" });
  fillEl.style.width = barWidth(state.win_prob.value);
  const bar = el("div", { class: "gauge-bar" }, fillEl);
  const root = el(
    "div",
    { class: `gauge team-${state.win_prob.team}`, "data-role": "gauge" },
    el("div", { class: "gauge-text" }, labelEl, valueEl),
    bar,
    el(
      "div",
      { class: "gauge-sides" },
      el("span", { "data-role": "gauge-blue" }, `Blue ${percent(state.win_prob.blue)}`),
      el("span", { "data-role": "gauge-purple" }, `Purple ${percent(state.win_prob.purple)}`),
    ),
  );
  return { root, valueEl, labelEl, fillEl };
}

/** Champion grid for the acting pick. Banned and taken champions are
 * disabled client-side with the reason as tooltip; the server remains the
 * authority and its 4xx reasons are surfaced if a click slips through. */
export function renderPickGrid(
  meta: MetaPayload,
  state: StatePayload,
  onPick: (champion: string) => void,
): HTMLElement {
  const taken = new Set(state.picks.map((p) => p.champion));
  const banned = new Set(state.bans);
  const grid = el("div", { class: "pick-grid", "data-role": "pick-grid" });
  for (const name of meta.champions) {
    const reason = banned.has(name) ? "banned" : taken.has(name) ? "taken" : null;
    const attrs: Record<string, string> = {
      class: "pick-button" + (reason ? ` blocked ${reason}` : ""),
      "data-champion": name,
      type: "button",
    };
    if (reason) {
      attrs.disabled = "";
      attrs.title = reason;
      attrs["data-blocked"] = reason;
    }
    const button = el("button", attrs, name);
    if (!reason) {
      button.addEventListener("click", () => onPick(name));
    }
    grid.append(button);
  }
  return grid;
}

// ---------------------------------------------------------------------------
// recommendation panel

export interface RecPanelHooks {
  onPick(champion: string): void;
  /** Hovering a card previews its win prob; null = hover ended. */
  onPreview(win: number | null): void;
  onStrategyChange(strategy: StrategyName): void;
  onTauChange(tau: number): void;
  onKChange(k: number): void;
  onRefresh(): void;
}

export interface RecControls {
  strategy: StrategyName;
  tau: number;
  k: number;
}

const STRATEGY_TITLES: Record<StrategyName, string> = {
  p: "most likely picks",
  v: "highest win probability",
  "p+v": "best win probability among likely picks",
};

function renderCard(
  card: RecommendationCard,
  rank: number,
  hooks: RecPanelHooks,
): HTMLElement {
  const classes = ["rec-card", card.passed_threshold ? "passed" : "padding"];
  const node = el("div", {
    class: classes.join(" "),
    "data-role": "rec-card",
    "data-champion": card.champion,
  });
  const pickButton = el(
    "button",
    { class: "card-pick", "data-role": "card-pick", type: "button" },
    "Pick",
  );
  pickButton.addEventListener("click", () => hooks.onPick(card.champion));
  node.append(
    el(
      "div",
      { class: "card-head" },
      el("span", { class: "card-rank" }, `#${rank}`),
      el("span", { class: "card-champion" }, card.champion),
      el("span", { class: "card-win", "data-role": "card-win" }, percent(card.win_prob)),
      pickButton,
    ),
  );
  const fill = el("div", { class: "select-fill" });
  fill.style.width = barWidth(card.select_prob);
  node.append(
    el(
      "div",
      { class: "card-select" },
      el("span", { class: "select-label" }, "pick likelihood"),
      el("div", { class: "select-bar", "data-role": "card-select-bar" }, fill),
      el(
        "span",
        { class: "select-text", "data-role": "card-select-text" },
        percent(card.select_prob),
      ),
    ),
  );
  const badges = el("div", { class: "card-badges" });
  const exp = card.explanation;
  if (exp?.synergy_champion) {
    badges.append(
      el(
        "span",
        { class: "badge synergy", "data-role": "badge-synergy" },
        `synergy · ${exp.synergy_champion}`,
      ),
    );
  }
  if (exp?.counter_champion) {
    badges.append(
      el(
        "span",
        { class: "badge counter", "data-role": "badge-counter" },
        `counter · ${exp.counter_champion}`,
      ),
    );
  }
  if (!card.passed_threshold) {
    badges.append(el("span", { class: "badge below-tau" }, "below τ"));
  }
  node.append(badges);
  node.addEventListener("mouseenter", () => hooks.onPreview(card.win_prob));
  node.addEventListener("mouseleave", () => hooks.onPreview(null));
  return node;
}

/** Cards render in exactly the order the service delivered them. */
export function renderRecPanel(
  recs: RecommendationsPayload | null,
  controls: RecControls,
  hooks: RecPanelHooks,
): HTMLElement {
  const panel = el("div", { class: "rec-panel", "data-role": "rec-panel" });
  const strategySelect = el("select", { "data-role": "strategy-select" });
  for (const name of ["p", "v", "p+v"] as StrategyName[]) {
    const attrs: Record<string, string> = { value: name, title: STRATEGY_TITLES[name] };
    if (name === controls.strategy) attrs.selected = "";
    strategySelect.append(el("option", attrs, name));
  }
  strategySelect.value = controls.strategy;
  strategySelect.addEventListener("change", () =>
    hooks.onStrategyChange(strategySelect.value as StrategyName),
  );
  const tauInput = el("input", {
    "data-role": "tau-input",
    type: "number",
    step: "0.01",
    min: "0",
    value: String(controls.tau),
  });
  tauInput.addEventListener("change", () => {
    const tau = Number(tauInput.value);
    if (Number.isFinite(tau) && tau >= 0) hooks.onTauChange(tau);
  });
  const kInput = el("input", {
    "data-role": "k-input",
    type: "number",
    step: "1",
    min: "1",
    value: String(controls.k),
  });
  kInput.addEventListener("change", () => {
    const k = Number(kInput.value);
    if (Number.isInteger(k) && k >= 1) hooks.onKChange(k);
  });
  const refresh = el(
    "button",
    { class: "recs-refresh", "data-role": "recs-refresh", type: "button" },
    "Refresh",
  );
  refresh.addEventListener("click", () => hooks.onRefresh());
  panel.append(
    el(
      "div",
      { class: "rec-controls" },
      el("label", {}, "strategy ", strategySelect),
      el("label", {}, "τ ", tauInput),
      el("label", {}, "k ", kInput),
      refresh,
    ),
  );
  if (recs === null) {
    panel.append(el("div", { class: "rec-loading", "data-role": "rec-loading" },
      "Loading recommendations…"));
    return panel;
  }
  panel.append(
    el(
      "div",
      { class: "rec-meta", "data-role": "rec-meta" },
      `${recs.legal_count} legal champions · model ${recs.model_version}`,
    ),
  );
  const list = el("div", { class: "rec-cards", "data-role": "rec-cards" });
  recs.recommendations.forEach((card, i) => list.append(renderCard(card, i + 1, hooks)));
  panel.append(list);
  return panel;
}

// ---------------------------------------------------------------------------
// completion + errors

export function renderCompletion(state: StatePayload): HTMLElement {
  const blue = state.win_prob.blue;
  const purple = state.win_prob.purple;
  const favored = blue >= purple ? "Blue" : "Purple";
  return el(
    "div",
    { class: "completion", "data-role": "completion" },
    el("h2", {}, "Draft complete"),
    el(
      "div",
      { class: "completion-probs" },
      el("span", { class: "team-blue", "data-role": "final-blue" }, `Blue ${percent(blue)}`),
      el("span", { class: "team-purple", "data-role": "final-purple" },
        `Purple ${percent(purple)}`),
    ),
    el("div", { class: "completion-note", "data-role": "final-note" },
      `${favored} is favored by the model.`),
  );
}

export interface ErrorView {
  message: string;
  code?: string;
  retriable: boolean;
}

export function renderErrorBanner(
  error: ErrorView,
  onRetry: () => void,
  onDismiss: () => void,
): HTMLElement {
  const banner = el("div", { class: "error-banner", "data-role": "error-banner" });
  const label = error.code ? `${error.message} (${error.code})` : error.message;
  banner.append(el("span", { class: "error-message" }, label));
  if (error.retriable) {
    const retry = el(
      "button",
      { class: "error-retry", "data-role": "error-retry", type: "button" },
      "Retry",
    );
    retry.addEventListener("click", onRetry);
    banner.append(retry);
  }
  const dismiss = el(
    "button",
    { class: "error-dismiss", "data-role": "error-dismiss", type: "button" },
    "Dismiss",
  );
  dismiss.addEventListener("click", onDismiss);
  banner.append(dismiss);
  return banner;
}

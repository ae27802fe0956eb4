/** Draft-board controller.
 *
 * The UI is a pure function of (server state, local hover/selection):
 * every action waits for the service's confirmation before the board
 * changes, errors leave the last confirmed state untouched, and a reload
 * rebuilds the identical board from GET /state.
 */

import { ApiError, DraftApi, NetworkError } from "./api.js";
import {
  el,
  renderBanStrip,
  renderCompletion,
  renderErrorBanner,
  renderGauge,
  renderPickGrid,
  renderRecPanel,
  renderTeams,
  renderTurnBanner,
  type ErrorView,
  type GaugeRefs,
  type RecControls,
} from "./board.js";
import { barWidth, percent, teamLabel } from "./format.js";
import { emptySetup, renderSetup, setupBody, type SetupState } from "./setup.js";
import type {
  MetaPayload,
  RecommendationsPayload,
  StatePayload,
  StrategyName,
} from "./types.js";

type Phase = "boot" | "setup" | "draft";

const HASH_PREFIX = "#s=";

export function sessionFromHash(hash: string): string | null {
  if (!hash.startsWith(HASH_PREFIX)) return null;
  const id = decodeURIComponent(hash.slice(HASH_PREFIX.length));
  return id === "" ? null : id;
}

export class DraftApp {
  readonly api: DraftApi;
  private readonly root: HTMLElement;
  private phase: Phase = "boot";
  private meta: MetaPayload | null = null;
  private setup: SetupState | null = null;
  private session: string | null = null;
  private state: StatePayload | null = null;
  private recs: RecommendationsPayload | null = null;
  private recsLoading = false;
  private controls: RecControls = { strategy: "p+v", tau: 0.02, k: 3 };
  private error: ErrorView | null = null;
  private bootError: ErrorView | null = null;
  private gauge: GaugeRefs | null = null;
  private busy = false;

  constructor(root: HTMLElement, baseUrl: string = "") {
    this.root = root;
    this.api = new DraftApi(baseUrl);
  }

  // -- lifecycle ------------------------------------------------------------

  async start(): Promise<void> {
    this.bootError = null;
    this.render();
    let meta: MetaPayload;
    try {
      meta = await this.api.meta();
    } catch (err) {
      this.bootError = this.describe(err, true);
      this.render();
      return;
    }
    this.meta = meta;
    this.setup = emptySetup(meta);
    this.controls = { ...meta.defaults };
    const sid = sessionFromHash(window.location.hash);
    if (sid !== null) {
      await this.rehydrate(sid);
    } else {
      this.phase = "setup";
      this.render();
    }
  }

  /** Rebuild the board for an existing session (mid-draft reload). */
  private async rehydrate(sessionId: string): Promise<void> {
    try {
      const state = await this.api.state(sessionId);
      this.session = sessionId;
      this.state = state;
      this.phase = "draft";
      this.render();
      await this.syncRecommendations();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        window.location.hash = "";
        this.phase = "setup";
        this.error = { message: "session not found; start a new draft", code: err.code, retriable: false };
        this.render();
        return;
      }
      this.bootError = this.describe(err, true);
      this.render();
    }
  }

  // -- actions --------------------------------------------------------------

  private async createSession(): Promise<void> {
    if (this.busy || this.setup === null) return;
    this.busy = true;
    try {
      const resp = await this.api.createSession(setupBody(this.setup));
      this.session = resp.session_id;
      this.state = resp.state;
      this.error = null;
      window.location.hash = HASH_PREFIX.slice(1) + encodeURIComponent(resp.session_id);
      this.phase = "draft";
      this.render();
      await this.syncRecommendations();
    } catch (err) {
      this.error = this.describe(err, err instanceof NetworkError);
      this.render();
    } finally {
      this.busy = false;
    }
  }

  private async pick(champion: string): Promise<void> {
    if (this.busy) return;
    const state = this.state;
    const session = this.session;
    if (state === null || session === null || state.turn === null) return;
    this.busy = true;
    try {
      const next = await this.api.pick(session, state.turn, champion);
      this.state = next;
      this.error = null;
      this.recs = null;
      this.render();
      if (!next.complete) {
        await this.syncRecommendations();
      }
    } catch (err) {
      // The confirmed board is left exactly as it was.
      this.error = this.describe(err, err instanceof NetworkError);
      this.render();
    } finally {
      this.busy = false;
    }
  }

  private async syncRecommendations(): Promise<void> {
    const session = this.session;
    if (session === null || this.state === null || this.state.complete) {
      this.recs = null;
      return;
    }
    this.recs = null;
    this.recsLoading = true;
    this.render();
    try {
      this.recs = await this.api.recommendations(session, this.controls);
    } catch (err) {
      if (err instanceof ApiError && err.code === "complete") {
        this.recs = null;
      } else {
        this.error = this.describe(err, err instanceof NetworkError);
      }
    } finally {
      this.recsLoading = false;
    }
    this.render();
  }

  /** Re-sync board and recommendations from the server after a failure. */
  private async retry(): Promise<void> {
    this.error = null;
    if (this.phase !== "draft" || this.session === null) {
      await this.start();
      return;
    }
    try {
      this.state = await this.api.state(this.session);
      this.render();
      await this.syncRecommendations();
    } catch (err) {
      this.error = this.describe(err, err instanceof NetworkError);
      this.render();
    }
  }

  /** Hover preview: show the card's win prob on the gauge without any
   * extra API call; restore the current state's value on hover end. */
  private preview(win: number | null): void {
    const gauge = this.gauge;
    const state = this.state;
    if (gauge === null || state === null) return;
    if (win === null) {
      gauge.valueEl.textContent = percent(state.win_prob.value);
      gauge.labelEl.textContent = `${teamLabel(state.win_prob.team)} win chance`;
      gauge.fillEl.style.width = barWidth(state.win_prob.value);
      gauge.root.classList.remove("preview");
    } else {
      gauge.valueEl.textContent = percent(win);
      gauge.labelEl.textContent = `${teamLabel(state.win_prob.team)} win chance if picked`;
      gauge.fillEl.style.width = barWidth(win);
      gauge.root.classList.add("preview");
    }
  }

  private describe(err: unknown, retriable: boolean): ErrorView {
    if (err instanceof ApiError) {
      return { message: err.message, code: err.code, retriable };
    }
    if (err instanceof NetworkError) {
      return { message: "service unreachable — nothing was changed", retriable };
    }
    return { message: err instanceof Error ? err.message : String(err), retriable };
  }

  // -- rendering ------------------------------------------------------------

  private render(): void {
    this.gauge = null;
    const children: HTMLElement[] = [];
    children.push(
      el(
        "header",
        { class: "app-header" },
        el("h1", {}, "Draft assistant"),
        this.session !== null
          ? el("span", { class: "session-tag", "data-role": "session-tag" },
              `session ${this.session}`)
          : el("span", {}),
      ),
    );
    if (this.bootError !== null) {
      children.push(
        renderErrorBanner(this.bootError, () => void this.start(), () => {
          this.bootError = null;
          this.render();
        }),
      );
    }
    if (this.error !== null) {
      children.push(
        renderErrorBanner(this.error, () => void this.retry(), () => {
          this.error = null;
          this.render();
        }),
      );
    }
    if (this.phase === "boot") {
      if (this.bootError === null) {
        children.push(el("div", { class: "boot", "data-role": "boot" }, "Connecting…"));
      }
      this.root.replaceChildren(...children);
      return;
    }
    const meta = this.meta;
    if (meta === null) {
      this.root.replaceChildren(...children);
      return;
    }
    if (this.phase === "setup") {
      const setup = this.setup ?? emptySetup(meta);
      this.setup = setup;
      children.push(
        renderSetup(meta, setup, {
          onToggleBan: (name) => {
            const at = setup.bans.indexOf(name);
            if (at >= 0) setup.bans.splice(at, 1);
            else setup.bans.push(name);
            this.render();
          },
          onStart: () => void this.createSession(),
        }),
      );
      this.root.replaceChildren(...children);
      return;
    }
    const state = this.state;
    if (state === null) {
      this.root.replaceChildren(...children);
      return;
    }
    children.push(renderTurnBanner(state, meta.num_turns));
    children.push(renderBanStrip(state.bans));
    const gauge = renderGauge(state);
    this.gauge = gauge;
    children.push(gauge.root);
    children.push(renderTeams(state));
    if (state.complete) {
      children.push(renderCompletion(state));
    } else {
      children.push(
        renderRecPanel(this.recsLoading ? null : this.recs, this.controls, {
          onPick: (champion) => void this.pick(champion),
          onPreview: (win) => this.preview(win),
          onStrategyChange: (strategy: StrategyName) => {
            this.controls.strategy = strategy;
            void this.syncRecommendations();
          },
          onTauChange: (tau) => {
            this.controls.tau = tau;
            void this.syncRecommendations();
          },
          onKChange: (k) => {
            this.controls.k = k;
            void this.syncRecommendations();
          },
          onRefresh: () => void this.syncRecommendations(),
        }),
      );
      children.push(renderPickGrid(meta, state, (champion) => void this.pick(champion)));
    }
    this.root.replaceChildren(...children);
  }
}

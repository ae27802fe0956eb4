/** Scripted end-to-end drafts in jsdom against the fixture service:
 * session creation with bans, the full ten-pick sequence, client-side
 * blocking plus server rejections, network failure recovery, and
 * mid-draft refresh rehydration.
 */

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { DraftApp } from "../src/app.js";
import type { CreateSessionBody } from "../src/types.js";
import { FixtureService, flush } from "./fixtures.js";
import { boardHTML, click, expectBoardMirrorsState, q, qa, text } from "./helpers.js";

describe("draft board end to end", () => {
  let fx: FixtureService;
  let restore: () => void;
  let root: HTMLElement;

  beforeEach(() => {
    fx = new FixtureService();
    restore = fx.install();
    window.location.hash = "";
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.append(root);
  });

  afterEach(() => {
    restore();
  });

  async function startDraft(
    prepare?: (root: HTMLElement) => void,
  ): Promise<{ app: DraftApp; sessionId: string }> {
    const app = new DraftApp(root);
    await app.start();
    if (prepare) prepare(root);
    click(root, '[data-role="start-draft"]');
    await flush();
    const ids = [...fx.sessions.keys()];
    expect(ids).toHaveLength(1);
    return { app, sessionId: ids[0]! };
  }

  function pickFromGrid(champion?: string): string {
    const buttons = qa<HTMLButtonElement>(root, ".pick-button");
    const target = champion
      ? buttons.find((b) => b.dataset.champion === champion)
      : buttons.find((b) => !b.disabled);
    expect(target).toBeDefined();
    expect(target!.disabled).toBe(false);
    target!.click();
    return target!.dataset.champion!;
  }

  it("runs a complete scripted session: bans, ten picks, completion", async () => {
    const { sessionId } = await startDraft((r) => {
      click(r, '[data-ban-toggle="Brand"]');
      click(r, '[data-ban-toggle="Karma"]');
      const player = q<HTMLInputElement>(r, '[data-player-input="1"]');
      player.value = "summoner42";
      player.dispatchEvent(new Event("input"));
      const role = q<HTMLSelectElement>(r, '[data-role-select="1"]');
      role.value = "mid";
      role.dispatchEvent(new Event("change"));
    });

    const created = fx.requests("POST", "/v1/sessions");
    expect(created).toHaveLength(1);
    const body = created[0]!.body as CreateSessionBody;
    expect(body.bans).toEqual(["Brand", "Karma"]);
    expect(body.checkpoint).toBe("main");
    expect(body.slots[0]).toEqual({ player_id: "summoner42", role: "mid" });
    expect(body.slots[1]).toEqual({});

    expect(text(root, '[data-role="session-tag"]')).toBe(`session ${sessionId}`);
    expectBoardMirrorsState(root, fx, sessionId);
    expect(text(root, '[data-role="turn-banner"]')).toBe("Turn 1 of 10 — Blue picking");
    expect(text(root, '[data-role="gauge-value"]')).toBe("47.0%");

    // Banned champions are blocked client-side with the reason as tooltip.
    const bannedButton = q<HTMLButtonElement>(root, '.pick-button[data-champion="Brand"]');
    expect(bannedButton.disabled).toBe(true);
    expect(bannedButton.title).toBe("banned");
    const before = fx.log.length;
    bannedButton.click();
    await flush();
    expect(fx.log.length).toBe(before); // no request was made

    const pickedChampions: string[] = [];
    for (let turn = 1; turn <= 10; turn++) {
      let champion: string;
      if (turn === 3 || turn === 7) {
        // Pick straight from a recommendation card.
        const card = q(root, '[data-role="rec-card"]');
        champion = card.getAttribute("data-champion")!;
        click(card, '[data-role="card-pick"]');
      } else {
        champion = pickFromGrid();
      }
      pickedChampions.push(champion);
      await flush();
      expect(fx.sessions.get(sessionId)!.picks).toEqual(pickedChampions);
      expectBoardMirrorsState(root, fx, sessionId);
      if (turn >= 1 && turn < 10) {
        // Champions already taken are blocked with a "taken" tooltip.
        const takenButton = q<HTMLButtonElement>(
          root,
          `.pick-button[data-champion="${pickedChampions[0]!}"]`,
        );
        expect(takenButton.disabled).toBe(true);
        expect(takenButton.title).toBe("taken");
      }
    }

    // Exactly one POST per pick; one recommendations fetch per open turn.
    expect(fx.requests("POST", "/picks")).toHaveLength(10);
    expect(fx.requests("GET", "/recommendations")).toHaveLength(10);

    // Completion screen with the final win probabilities.
    expect(q(root, '[data-role="completion"]')).toBeTruthy();
    expect(text(root, '[data-role="final-blue"]')).toBe("Blue 58.0%");
    expect(text(root, '[data-role="final-purple"]')).toBe("Purple 42.0%");
    expect(root.querySelector('[data-role="pick-grid"]')).toBeNull();
    expect(root.querySelector('[data-role="rec-panel"]')).toBeNull();
    expect(text(root, '[data-role="turn-banner"]')).toBe("Draft complete");
  });

  it("surfaces a server-side rejection without corrupting the board", async () => {
    const { sessionId } = await startDraft();
    pickFromGrid();
    await flush();
    const confirmed = boardHTML(root);

    fx.failNextPick = { status: 422, code: "taken", message: "champion is already picked" };
    pickFromGrid("Caitlyn");
    await flush();
    const banner = q(root, '[data-role="error-banner"]');
    expect(banner.textContent).toContain("champion is already picked");
    expect(banner.textContent).toContain("taken");
    expect(fx.sessions.get(sessionId)!.picks).toHaveLength(1);
    expect(boardHTML(root)).toBe(confirmed); // last confirmed state untouched

    click(root, '[data-role="error-dismiss"]');
    expect(root.querySelector('[data-role="error-banner"]')).toBeNull();

    // The same click now succeeds.
    pickFromGrid("Caitlyn");
    await flush();
    expect(fx.sessions.get(sessionId)!.picks).toHaveLength(2);
    expectBoardMirrorsState(root, fx, sessionId);
  });

  it("recovers from a network failure via the retry banner", async () => {
    const { sessionId } = await startDraft();
    fx.offline = true;
    pickFromGrid("Darius");
    await flush();
    const banner = q(root, '[data-role="error-banner"]');
    expect(banner.textContent).toContain("service unreachable");
    expect(fx.sessions.get(sessionId)!.picks).toHaveLength(0);
    expectBoardMirrorsState(root, fx, sessionId); // board still at turn 1

    fx.offline = false;
    click(root, '[data-role="error-retry"]');
    await flush();
    expect(root.querySelector('[data-role="error-banner"]')).toBeNull();
    expectBoardMirrorsState(root, fx, sessionId);
    expect(fx.requests("GET", "/state").length).toBeGreaterThan(0);

    // Drafting continues normally after recovery.
    pickFromGrid("Darius");
    await flush();
    expect(fx.sessions.get(sessionId)!.picks).toEqual(["Darius"]);
  });

  it("rehydrates an identical board after a mid-draft refresh", async () => {
    const { sessionId } = await startDraft((r) => {
      click(r, '[data-ban-toggle="Olaf"]');
      const player = q<HTMLInputElement>(r, '[data-player-input="4"]');
      player.value = "toplaner";
      player.dispatchEvent(new Event("input"));
    });
    for (let turn = 1; turn <= 4; turn++) {
      pickFromGrid();
      await flush();
    }
    expectBoardMirrorsState(root, fx, sessionId);
    const boardBefore = boardHTML(root);
    const panelBefore = q(root, '[data-role="rec-panel"]').outerHTML;
    expect(window.location.hash).toBe(`#s=${sessionId}`);

    // Fresh mount in the same browsing context — a page reload.
    const root2 = document.createElement("div");
    document.body.append(root2);
    const rehydrated = new DraftApp(root2);
    await rehydrated.start();

    expect(root2.querySelector('[data-role="setup"]')).toBeNull();
    expectBoardMirrorsState(root2, fx, sessionId);
    expect(boardHTML(root2)).toBe(boardBefore);
    expect(q(root2, '[data-role="rec-panel"]').outerHTML).toBe(panelBefore);
    expect(text(root2, '[data-role="session-tag"]')).toBe(`session ${sessionId}`);
  });

  it("falls back to setup when the hash names a dead session", async () => {
    window.location.hash = "#s=fx9999";
    const app = new DraftApp(root);
    await app.start();
    expect(q(root, '[data-role="setup"]')).toBeTruthy();
    expect(text(root, '[data-role="error-banner"]')).toContain("session not found");
  });
});

/** Shared DOM helpers for the jsdom tests. */

import { expect } from "vitest";

import { percent } from "../src/format.js";
import type { FixtureService } from "./fixtures.js";

export function q<T extends Element = HTMLElement>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  expect(node, `expected element ${selector}`).not.toBeNull();
  return node as T;
}

export function qa<T extends Element = HTMLElement>(root: ParentNode, selector: string): T[] {
  return [...root.querySelectorAll(selector)] as T[];
}

export function click(root: ParentNode, selector: string): void {
  q<HTMLButtonElement>(root, selector).click();
}

export function text(root: ParentNode, selector: string): string {
  return q(root, selector).textContent ?? "";
}

/** The rendered board region (banner, bans, gauge, columns) as one string. */
export function boardHTML(root: ParentNode): string {
  return ["turn-banner", "ban-strip", "gauge", "teams"]
    .map((role) => q(root, `[data-role="${role}"]`).outerHTML)
    .join("\n");
}

/** Assert the rendered board mirrors the service's state payload exactly. */
export function expectBoardMirrorsState(
  root: ParentNode,
  fx: FixtureService,
  sessionId: string,
): void {
  const state = fx.statePayload(sessionId);
  const chips = qa(root, "[data-ban]").map((chip) => chip.textContent);
  expect(chips).toEqual(state.bans);
  for (const slot of state.slots) {
    const cell = q(root, `[data-slot="${slot.turn}"]`);
    expect(cell.closest(`[data-team="${slot.team}"]`)).not.toBeNull();
    if (slot.champion !== null) {
      expect(text(cell, ".slot-champion")).toBe(slot.champion);
    }
    const playerLine = `${slot.player ?? "unknown player"} · ${slot.role ?? "unknown role"}`;
    expect(text(cell, ".slot-player")).toBe(playerLine);
  }
  const picking = qa(root, ".slot.picking");
  if (state.complete) {
    expect(picking).toHaveLength(0);
    expect(text(root, '[data-role="turn-banner"]')).toBe("Draft complete");
  } else {
    expect(picking).toHaveLength(1);
    expect(picking[0]!.getAttribute("data-slot")).toBe(String(state.turn));
    expect(text(root, '[data-role="turn-banner"]')).toContain(`Turn ${state.turn}`);
  }
  expect(text(root, '[data-role="gauge-value"]')).toBe(percent(state.win_prob.value));
  expect(text(root, '[data-role="gauge-blue"]')).toBe(`Blue ${percent(state.win_prob.blue)}`);
  expect(text(root, '[data-role="gauge-purple"]')).toBe(
    `Purple ${percent(state.win_prob.purple)}`,
  );
}

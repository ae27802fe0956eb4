/** Session-creation form: ban selection plus per-slot player/role bindings.
 *
 * Slots default to anonymous; the service substitutes unknown-player
 * placeholders for anything left unbound.
 */

import { el } from "./board.js";
import { teamLabel } from "./format.js";
import type { CreateSessionBody, MetaPayload, SlotBody } from "./types.js";

export interface SlotDraft {
  player: string;
  role: string;
}

export interface SetupState {
  bans: string[];
  slots: SlotDraft[];
  checkpoint: string;
}

export function emptySetup(meta: MetaPayload): SetupState {
  return {
    bans: [],
    slots: Array.from({ length: meta.num_turns }, () => ({ player: "", role: "" })),
    checkpoint: meta.default_checkpoint,
  };
}

export function setupBody(setup: SetupState): CreateSessionBody {
  const slots: SlotBody[] = setup.slots.map((slot) => {
    const body: SlotBody = {};
    if (slot.player.trim() !== "") body.player_id = slot.player.trim();
    if (slot.role !== "") body.role = slot.role;
    return body;
  });
  return { checkpoint: setup.checkpoint, bans: [...setup.bans], slots };
}

export interface SetupHooks {
  onToggleBan(champion: string): void;
  onStart(): void;
}

export function renderSetup(
  meta: MetaPayload,
  setup: SetupState,
  hooks: SetupHooks,
): HTMLElement {
  const node = el("div", { class: "setup", "data-role": "setup" });
  node.append(el("h2", {}, "New draft"));

  if (meta.checkpoints.length > 1) {
    const select = el("select", { "data-role": "checkpoint-select" });
    for (const ckpt of meta.checkpoints) {
      const attrs: Record<string, string> = { value: ckpt.name };
      if (ckpt.name === setup.checkpoint) attrs.selected = "";
      select.append(el("option", attrs, `${ckpt.name} (${ckpt.digest})`));
    }
    select.value = setup.checkpoint;
    select.addEventListener("change", () => {
      setup.checkpoint = select.value;
    });
    node.append(el("label", { class: "setup-checkpoint" }, "model ", select));
  }

  node.append(el("h3", {}, `Bans (${setup.bans.length})`));
  const banGrid = el("div", { class: "ban-grid", "data-role": "ban-grid" });
  const banned = new Set(setup.bans);
  for (const name of meta.champions) {
    const attrs: Record<string, string> = {
      class: "ban-toggle" + (banned.has(name) ? " selected" : ""),
      "data-ban-toggle": name,
      type: "button",
    };
    const button = el("button", attrs, name);
    button.addEventListener("click", () => hooks.onToggleBan(name));
    banGrid.append(button);
  }
  node.append(banGrid);

  node.append(el("h3", {}, "Players"));
  const slotList = el("div", { class: "slot-list" });
  setup.slots.forEach((slot, i) => {
    const turn = i + 1;
    const team = meta.turn_teams[i] ?? "blue";
    const row = el("div", {
      class: `slot-row team-${team}`,
      "data-slot-row": String(turn),
    });
    row.append(el("span", { class: "slot-row-label" }, `T${turn} ${teamLabel(team)}`));
    if (meta.player_directory) {
      const playerInput = el("input", {
        type: "text",
        placeholder: "player id (blank = anonymous)",
        "data-player-input": String(turn),
        value: slot.player,
      });
      playerInput.addEventListener("input", () => {
        slot.player = playerInput.value;
      });
      row.append(playerInput);
    }
    const roleSelect = el("select", { "data-role-select": String(turn) });
    roleSelect.append(el("option", { value: "" }, "unknown role"));
    for (const role of meta.roles) {
      const attrs: Record<string, string> = { value: role };
      if (role === slot.role) attrs.selected = "";
      roleSelect.append(el("option", attrs, role));
    }
    roleSelect.value = slot.role;
    roleSelect.addEventListener("change", () => {
      slot.role = roleSelect.value;
    });
    row.append(roleSelect);
    slotList.append(row);
  });
  node.append(slotList);

  const start = el(
    "button",
    { class: "start-draft", "data-role": "start-draft", type: "button" },
    "Start draft",
  );
  start.addEventListener("click", () => hooks.onStart());
  node.append(start);
  return node;
}

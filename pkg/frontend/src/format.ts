/** Render-time formatting helpers. All numbers come from API payloads
 * verbatim; these only round for display. */

/** Probability → "54.1%" (one decimal, the only rounding the UI does). */
export function percent(p: number): string {
  return (100 * p).toFixed(1) + "%";
}

/** Probability → CSS width for a bar, clamped to [0, 100]%. */
export function barWidth(p: number): string {
  const clamped = Math.min(1, Math.max(0, p));
  return (100 * clamped).toFixed(1) + "%";
}

/** "blue" → "Blue" for labels. */
export function teamLabel(team: string): string {
  return team.charAt(0).toUpperCase() + team.slice(1);
}

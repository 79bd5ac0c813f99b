// Rank-movement diffing: what moved between two consecutive rankings, so
// what-if edits stay legible.

export type MovementKind = "same" | "up" | "down" | "new";

export interface Movement {
	kind: MovementKind;
	/** Positions gained (positive) or lost (negative); 0 for same/new. */
	delta: number;
}

/**
 * Compare the previous displayed ranking with the next one.
 * Venues absent from the previous ranking are "new"; delta counts list
 * positions moved relative to the previous ranking.
 */
export function rankMovement(
	previous: string[] | null,
	next: string[],
): Map<string, Movement> {
	const out = new Map<string, Movement>();
	if (!previous) {
		for (const id of next) out.set(id, { kind: "same", delta: 0 });
		return out;
	}
	const before = new Map(previous.map((id, i) => [id, i]));
	next.forEach((id, i) => {
		const prev = before.get(id);
		if (prev === undefined) {
			out.set(id, { kind: "new", delta: 0 });
		} else if (prev === i) {
			out.set(id, { kind: "same", delta: 0 });
		} else {
			out.set(id, { kind: prev > i ? "up" : "down", delta: prev - i });
		}
	});
	return out;
}

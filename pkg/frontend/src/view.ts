// DOM rendering of controller state: probability bars, scope chips,
// movement markers, error banner, and the venue detail panel.

import type { ControllerState } from "./controller.js";
import type { Movement } from "./diff.js";

function el<K extends keyof HTMLElementTagNameMap>(
	tag: K,
	className?: string,
	text?: string,
): HTMLElementTagNameMap[K] {
	const node = document.createElement(tag);
	if (className) node.className = className;
	if (text !== undefined) node.textContent = text;
	return node;
}

function movementMarker(move: Movement | undefined): HTMLElement {
	const marker = el("span", "move");
	if (!move || move.kind === "same") {
		marker.classList.add("move-same");
		marker.textContent = "·";
	} else if (move.kind === "new") {
		marker.classList.add("move-new");
		marker.textContent = "new";
	} else {
		marker.classList.add(move.kind === "up" ? "move-up" : "move-down");
		marker.textContent = `${move.kind === "up" ? "▲" : "▼"}${Math.abs(move.delta)}`;
	}
	return marker;
}

export interface ViewHooks {
	onVenueClick(venueId: string): void;
}

export function renderRanking(
	container: HTMLElement,
	state: ControllerState,
	hooks: ViewHooks,
): void {
	container.replaceChildren();
	if (state.banner) {
		container.appendChild(el("div", "banner", state.banner));
	}
	if (!state.ranking) {
		container.appendChild(
			el("p", "placeholder", "Type a title, abstract, or keywords to rank venues."),
		);
		return;
	}
	const list = el("ol", "ranking");
	for (const entry of state.ranking) {
		const item = el("li", "venue-row");
		item.dataset.venueId = entry.venue_id;
		item.appendChild(movementMarker(state.movement.get(entry.venue_id)));

		const label = el("button", "venue-name", entry.name);
		label.type = "button";
		label.title = state.venuesAvailable
			? "Show aims & scope"
			: "Venue details unavailable (venue list could not be loaded)";
		label.disabled = !state.venuesAvailable;
		label.addEventListener("click", () => hooks.onVenueClick(entry.venue_id));
		item.appendChild(label);

		const bar = el("div", "prob-bar");
		const fill = el("div", "prob-fill");
		fill.style.width = `${Math.round(entry.probability * 1000) / 10}%`;
		bar.appendChild(fill);
		item.appendChild(bar);
		item.appendChild(el("span", "prob-text", entry.probability.toFixed(4)));

		if (entry.scope_score !== undefined) {
			item.appendChild(
				el("span", "scope-chip", `scope ${entry.scope_score.toFixed(3)}`),
			);
		}
		list.appendChild(item);
	}
	container.appendChild(list);
	if (state.pending) container.appendChild(el("div", "pending", "updating…"));
	if (state.modelId) {
		container.appendChild(el("div", "model-id", `model ${state.modelId}`));
	}
}

export function renderDetail(
	panel: HTMLElement,
	state: ControllerState,
	venue: { name: string; aims_scope: string } | null,
): void {
	panel.replaceChildren();
	if (!state.detailVenueId) {
		panel.classList.add("hidden");
		return;
	}
	panel.classList.remove("hidden");
	if (!venue) {
		panel.appendChild(el("p", "empty-state", "No details for this venue."));
		return;
	}
	panel.appendChild(el("h3", undefined, venue.name));
	panel.appendChild(el("p", "scope-text", venue.aims_scope));
}

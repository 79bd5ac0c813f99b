// Query state machine: debounced live re-ranking with stale-response
// protection. Framework-free so the contract is testable against a stub
// transport with fake timers.
//
// Rules enforced here:
//  * edits debounce (default 400 ms) into exactly one request per burst;
//  * responses render only if no newer response has rendered (monotone
//    sequence numbers) - stale responses are discarded;
//  * the displayed ranking is always a verbatim prefix of the most recently
//    completed response - no client-side re-sorting, no client-side text
//    cleaning;
//  * lowering k truncates locally when the cached response has enough
//    entries, otherwise a refetch fires;
//  * errors surface as a banner and never clear the last good ranking.

import type { RankedVenue, RecommendResponse, Transport, VenueInfo } from "./api.js";
import { ServiceError } from "./api.js";
import { Movement, rankMovement } from "./diff.js";

export interface QueryFields {
	title: string;
	abstract: string;
	keywords: string;
}

export interface ControllerState {
	query: QueryFields;
	k: number;
	ranking: RankedVenue[] | null;
	movement: Map<string, Movement>;
	banner: string | null;
	pending: boolean;
	modelId: string | null;
	venues: VenueInfo[] | null;
	venuesAvailable: boolean;
	detailVenueId: string | null;
}

export type Listener = (state: ControllerState) => void;

export class QueryController {
	private state: ControllerState = {
		query: { title: "", abstract: "", keywords: "" },
		k: 10,
		ranking: null,
		movement: new Map(),
		banner: null,
		pending: false,
		modelId: null,
		venues: null,
		venuesAvailable: false,
		detailVenueId: null,
	};

	private seq = 0;
	private renderedSeq = 0;
	private timer: ReturnType<typeof setTimeout> | null = null;
	private lastResponse: RecommendResponse | null = null;
	private listeners: Listener[] = [];

	constructor(
		private readonly transport: Transport,
		private readonly debounceMs: number = 400,
	) {}

	subscribe(listener: Listener): void {
		this.listeners.push(listener);
	}

	snapshot(): ControllerState {
		return this.state;
	}

	/** Load the venue list once; failure disables the detail panel. */
	async loadVenues(): Promise<void> {
		try {
			const resp = await this.transport.venues();
			this.update({ venues: resp.venues, venuesAvailable: true });
		} catch {
			this.update({ venues: null, venuesAvailable: false });
		}
	}

	/** Edit a text field exactly as typed; schedules a debounced re-rank. */
	editField(field: keyof QueryFields, value: string): void {
		this.update({ query: { ...this.state.query, [field]: value } });
		this.schedule();
	}

	/**
	 * Change k. Truncating to a smaller k reuses the cached full response
	 * when it has at least k entries; growing past the cache refetches.
	 */
	setK(k: number): void {
		this.update({ k });
		if (this.lastResponse && this.lastResponse.ranked.length >= k) {
			this.renderResponse(this.lastResponse, this.renderedSeq);
		} else {
			this.schedule();
		}
	}

	/** Pin the detail panel to a venue; re-ranks never unpin it. */
	showDetail(venueId: string | null): void {
		this.update({ detailVenueId: venueId });
	}

	detailVenue(): VenueInfo | null {
		if (!this.state.detailVenueId || !this.state.venues) return null;
		return (
			this.state.venues.find((v) => v.venue_id === this.state.detailVenueId) ?? null
		);
	}

	/** Queue a request now (bypassing the debounce); used by form submit. */
	flush(): void {
		if (this.timer !== null) {
			clearTimeout(this.timer);
			this.timer = null;
		}
		void this.send();
	}

	private schedule(): void {
		if (this.timer !== null) clearTimeout(this.timer);
		this.timer = setTimeout(() => {
			this.timer = null;
			void this.send();
		}, this.debounceMs);
	}

	private hasQueryText(): boolean {
		const q = this.state.query;
		return Boolean(q.title.trim() || q.abstract.trim() || q.keywords.trim());
	}

	private async send(): Promise<void> {
		if (!this.hasQueryText()) return;
		const mySeq = ++this.seq;
		this.update({ pending: true });
		const q = this.state.query;
		try {
			const resp = await this.transport.recommend({
				// sent exactly as typed; the service owns preprocessing
				title: q.title,
				abstract: q.abstract,
				keywords: q.keywords
					.split(";")
					.map((s) => s.trim())
					.filter((s) => s.length > 0),
				k: this.state.k,
			});
			if (mySeq <= this.renderedSeq) return; // a newer response already rendered
			this.lastResponse = resp;
			this.renderResponse(resp, mySeq);
		} catch (err) {
			if (mySeq <= this.renderedSeq) return;
			const message =
				err instanceof ServiceError
					? err.field
						? `${err.message} (${err.field})`
						: err.message
					: "service unreachable";
			// keep the last good ranking on the screen
			this.update({ banner: message, pending: this.seq !== mySeq });
		}
	}

	private renderResponse(resp: RecommendResponse, seq: number): void {
		this.renderedSeq = seq;
		const shown = resp.ranked.slice(0, this.state.k);
		const movement = rankMovement(
			this.state.ranking ? this.state.ranking.map((r) => r.venue_id) : null,
			shown.map((r) => r.venue_id),
		);
		this.update({
			ranking: shown,
			movement,
			banner: null,
			pending: this.seq !== seq,
			modelId: resp.model_id,
		});
	}

	private update(patch: Partial<ControllerState>): void {
		this.state = { ...this.state, ...patch };
		for (const listener of this.listeners) listener(this.state);
	}
}

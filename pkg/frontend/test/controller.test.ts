// Controller contract against a stub service with scripted responses.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type {
	RecommendRequest,
	RecommendResponse,
	Transport,
	VenuesResponse,
} from "../src/api.js";
import { ServiceError } from "../src/api.js";
import { QueryController } from "../src/controller.js";

interface Deferred<T> {
	promise: Promise<T>;
	resolve: (value: T) => void;
	reject: (err: unknown) => void;
}

function deferred<T>(): Deferred<T> {
	let resolve!: (value: T) => void;
	let reject!: (err: unknown) => void;
	const promise = new Promise<T>((res, rej) => {
		resolve = res;
		reject = rej;
	});
	return { promise, resolve, reject };
}

class StubTransport implements Transport {
	calls: RecommendRequest[] = [];
	pending: Deferred<RecommendResponse>[] = [];
	venuesResponse: VenuesResponse | null = {
		model_id: "m1",
		venues: [
			{ venue_id: "v1", name: "Venue One", aims_scope: "scope one" },
			{ venue_id: "v2", name: "Venue Two", aims_scope: "scope two" },
		],
	};

	recommend(req: RecommendRequest): Promise<RecommendResponse> {
		this.calls.push(structuredClone(req));
		const d = deferred<RecommendResponse>();
		this.pending.push(d);
		return d.promise;
	}

	venues(): Promise<VenuesResponse> {
		if (!this.venuesResponse) {
			return Promise.reject(new ServiceError("unreachable", 0));
		}
		return Promise.resolve(this.venuesResponse);
	}
}

function payload(ids: string[], modelId = "m1"): RecommendResponse {
	return {
		model_id: modelId,
		ranked: ids.map((id, i) => ({
			venue_id: id,
			name: `Venue ${id}`,
			probability: 0.5 / (i + 1),
			scope_score: 0.1 * i,
		})),
	};
}

async function microtasks(): Promise<void> {
	for (let i = 0; i < 4; i++) await Promise.resolve();
}

describe("debounce", () => {
	beforeEach(() => vi.useFakeTimers());
	afterEach(() => vi.useRealTimers());

	it("fires exactly one request per edit burst", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "d");
		c.editField("title", "de");
		c.editField("title", "deep");
		c.editField("keywords", "ranking");
		expect(stub.calls.length).toBe(0); // nothing until the pause
		vi.advanceTimersByTime(399);
		expect(stub.calls.length).toBe(0);
		vi.advanceTimersByTime(1);
		await microtasks();
		expect(stub.calls.length).toBe(1);
		expect(stub.calls[0].title).toBe("deep");
		expect(stub.calls[0].keywords).toEqual(["ranking"]);
	});

	it("a second burst after the pause fires a second request", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "one");
		vi.advanceTimersByTime(400);
		await microtasks();
		c.editField("title", "two");
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls.length).toBe(2);
	});

	it("sends text exactly as typed, no client-side cleaning", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "  The QUICK  brown-Fox!! $x^2$  ");
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls[0].title).toBe("  The QUICK  brown-Fox!! $x^2$  ");
	});

	it("empty query never fires", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "x");
		c.editField("title", "");
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls.length).toBe(0);
	});
});

describe("stale responses", () => {
	beforeEach(() => vi.useFakeTimers());
	afterEach(() => vi.useRealTimers());

	it("never render when a newer response already did", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "first");
		vi.advanceTimersByTime(400);
		await microtasks();
		c.editField("title", "second");
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls.length).toBe(2);

		// the second request completes first; the first arrives late
		stub.pending[1].resolve(payload(["v2", "v1"]));
		await microtasks();
		expect(c.snapshot().ranking!.map((r) => r.venue_id)).toEqual(["v2", "v1"]);

		stub.pending[0].resolve(payload(["v1", "v2"]));
		await microtasks();
		expect(c.snapshot().ranking!.map((r) => r.venue_id)).toEqual(["v2", "v1"]);
	});

	it("late errors from a superseded request do not raise a banner", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.editField("title", "first");
		vi.advanceTimersByTime(400);
		await microtasks();
		c.editField("title", "second");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[1].resolve(payload(["v1"]));
		await microtasks();
		stub.pending[0].reject(new ServiceError("boom", 500));
		await microtasks();
		expect(c.snapshot().banner).toBeNull();
		expect(c.snapshot().ranking!.length).toBe(1);
	});
});

describe("rendered ranking", () => {
	beforeEach(() => vi.useFakeTimers());
	afterEach(() => vi.useRealTimers());

	async function ranked(c: QueryController, stub: StubTransport, ids: string[]) {
		c.editField("title", `q-${ids.join("")}`);
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[stub.pending.length - 1].resolve(payload(ids));
		await microtasks();
	}

	it("equals the stub payload verbatim", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		const resp = payload(["v3", "v1", "v2"]);
		c.editField("abstract", "some text");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[0].resolve(resp);
		await microtasks();
		expect(c.snapshot().ranking).toEqual(resp.ranked);
		expect(c.snapshot().modelId).toBe("m1");
	});

	it("marks venues that moved since the previous ranking", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		await ranked(c, stub, ["v1", "v2", "v3"]);
		await ranked(c, stub, ["v2", "v1", "v4"]);
		const movement = c.snapshot().movement;
		expect(movement.get("v2")).toEqual({ kind: "up", delta: 1 });
		expect(movement.get("v1")).toEqual({ kind: "down", delta: -1 });
		expect(movement.get("v4")).toEqual({ kind: "new", delta: 0 });
	});

	it("errors show a banner and keep the last good ranking", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		await ranked(c, stub, ["v1", "v2"]);
		c.editField("title", "broken");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[1].reject(new ServiceError("at least one field", 400, "title"));
		await microtasks();
		const state = c.snapshot();
		expect(state.banner).toContain("at least one field");
		expect(state.banner).toContain("title");
		expect(state.ranking!.map((r) => r.venue_id)).toEqual(["v1", "v2"]);
	});
});

describe("k changes", () => {
	beforeEach(() => vi.useFakeTimers());
	afterEach(() => vi.useRealTimers());

	it("truncates locally when the cached response has enough entries", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.setK(4);
		c.editField("title", "text");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[0].resolve(payload(["v1", "v2", "v3", "v4"]));
		await microtasks();
		c.setK(2);
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls.length).toBe(1); // no refetch
		expect(c.snapshot().ranking!.map((r) => r.venue_id)).toEqual(["v1", "v2"]);
		c.setK(4); // cached still has 4 entries: restore locally
		await microtasks();
		expect(stub.calls.length).toBe(1);
		expect(c.snapshot().ranking!.length).toBe(4);
	});

	it("refetches when k grows past the cached response", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		c.setK(2);
		c.editField("title", "text");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[0].resolve(payload(["v1", "v2"]));
		await microtasks();
		c.setK(5);
		vi.advanceTimersByTime(400);
		await microtasks();
		expect(stub.calls.length).toBe(2);
		expect(stub.calls[1].k).toBe(5);
	});
});

describe("venue detail", () => {
	beforeEach(() => vi.useFakeTimers());
	afterEach(() => vi.useRealTimers());

	it("resolves venue info and pins across re-ranks", async () => {
		const stub = new StubTransport();
		const c = new QueryController(stub, 400);
		await c.loadVenues();
		expect(c.snapshot().venuesAvailable).toBe(true);
		c.showDetail("v2");
		expect(c.detailVenue()!.aims_scope).toBe("scope two");

		c.editField("title", "new text");
		vi.advanceTimersByTime(400);
		await microtasks();
		stub.pending[0].resolve(payload(["v1", "v2"]));
		await microtasks();
		expect(c.snapshot().detailVenueId).toBe("v2"); // still pinned

		c.showDetail("unknown-id");
		expect(c.detailVenue()).toBeNull(); // empty-state panel
	});

	it("unreachable venue list disables the detail feature", async () => {
		const stub = new StubTransport();
		stub.venuesResponse = null;
		const c = new QueryController(stub, 400);
		await c.loadVenues();
		expect(c.snapshot().venuesAvailable).toBe(false);
		expect(c.detailVenue()).toBeNull();
	});
});

// Typed client for the recommendation service's three JSON endpoints.

export interface RecommendRequest {
	title: string;
	abstract: string;
	keywords: string[];
	k: number;
}

export interface RankedVenue {
	venue_id: string;
	name: string;
	probability: number;
	scope_score?: number;
}

export interface RecommendResponse {
	model_id: string;
	ranked: RankedVenue[];
}

export interface VenueInfo {
	venue_id: string;
	name: string;
	aims_scope: string;
}

export interface VenuesResponse {
	model_id: string;
	venues: VenueInfo[];
}

export interface HealthResponse {
	model_id: string;
	n_venues: number;
	variant: string;
	combo: string;
	uses_scope: boolean;
}

/** Error carrying the service's field-level message for the inline banner. */
export class ServiceError extends Error {
	constructor(
		message: string,
		public readonly status: number,
		public readonly field?: string,
	) {
		super(message);
	}
}

/** Transport boundary: the controller only sees these two calls, so tests
 * substitute a scripted stub. */
export interface Transport {
	recommend(req: RecommendRequest): Promise<RecommendResponse>;
	venues(): Promise<VenuesResponse>;
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
	const body = await resp.json().catch(() => ({}));
	if (!resp.ok) {
		const message =
			typeof body.error === "string" ? body.error : `service error ${resp.status}`;
		throw new ServiceError(message, resp.status, body.field);
	}
	return body as T;
}

export function httpTransport(baseUrl: string): Transport {
	const base = baseUrl.replace(/\/+$/, "");
	return {
		async recommend(req: RecommendRequest): Promise<RecommendResponse> {
			const resp = await fetch(`${base}/recommend`, {
				method: "POST",
				headers: { "Content-Type": "application/json" },
				body: JSON.stringify(req),
			});
			return parseOrThrow<RecommendResponse>(resp);
		},
		async venues(): Promise<VenuesResponse> {
			return parseOrThrow<VenuesResponse>(await fetch(`${base}/venues`));
		},
	};
}

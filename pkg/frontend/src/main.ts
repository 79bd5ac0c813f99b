// Bootstrap: wire the form inputs to the controller and keep the DOM in
// sync with its state.

import { httpTransport } from "./api.js";
import { QueryController } from "./controller.js";
import { renderDetail, renderRanking } from "./view.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8765";

function byId<T extends HTMLElement>(id: string): T {
	const node = document.getElementById(id);
	if (!node) throw new Error(`missing element #${id}`);
	return node as T;
}

function boot(): void {
	const serviceInput = byId<HTMLInputElement>("service-url");
	serviceInput.value = localStorage.getItem("venuerank.service") ?? DEFAULT_SERVICE;

	let controller = makeController(serviceInput.value);

	serviceInput.addEventListener("change", () => {
		localStorage.setItem("venuerank.service", serviceInput.value);
		controller = makeController(serviceInput.value);
	});

	function makeController(baseUrl: string): QueryController {
		const c = new QueryController(httpTransport(baseUrl));
		const results = byId<HTMLDivElement>("results");
		const detail = byId<HTMLDivElement>("detail");
		c.subscribe((state) => {
			renderRanking(results, state, {
				onVenueClick: (venueId) => c.showDetail(venueId),
			});
			renderDetail(detail, state, c.detailVenue());
		});
		void c.loadVenues();

		byId<HTMLInputElement>("title").addEventListener("input", (e) =>
			c.editField("title", (e.target as HTMLInputElement).value),
		);
		byId<HTMLTextAreaElement>("abstract").addEventListener("input", (e) =>
			c.editField("abstract", (e.target as HTMLTextAreaElement).value),
		);
		byId<HTMLInputElement>("keywords").addEventListener("input", (e) =>
			c.editField("keywords", (e.target as HTMLInputElement).value),
		);
		byId<HTMLSelectElement>("topk").addEventListener("change", (e) =>
			c.setK(parseInt((e.target as HTMLSelectElement).value, 10)),
		);
		byId<HTMLButtonElement>("rank-now").addEventListener("click", () => c.flush());
		return c;
	}
}

document.addEventListener("DOMContentLoaded", boot);

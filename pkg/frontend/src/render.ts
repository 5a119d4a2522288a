/*
  DOM renderer for the duet state document.

  The view is description-driven: every control on screen comes from exactly one
  component config in the active payload, and nothing is invented client-side.
  Unknown component kinds become inert labeled placeholders. A payload that fails
  schema validation raises an error banner and leaves the previous view intact.
*/

import type { ZodError, ZodInvalidUnionIssue } from "zod";

import {
  ActionBody,
  ActionRecord,
  CardViewConfig,
  Component,
  DashboardItem,
  KnownComponent,
  PageState,
  STAGES,
  StateDoc,
  isKnownComponent,
  stateDocSchema,
  unchangedSchema,
} from "./types.js";

export type ApplyResult =
  | { kind: "rendered"; interfaceVersion: number }
  | { kind: "unchanged" }
  | { kind: "stale" }
  | { kind: "rejected"; detail: string };

export interface ViewHooks {
  submit(body: ActionBody): void;
}

interface ItemRecord {
  id?: unknown;
  [key: string]: unknown;
}

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

function formatPrice(value: number | string): string {
  return typeof value === "number" ? value.toFixed(2) : value;
}

/** Human-readable issue list; union failures surface their nested field errors. */
function describeIssues(error: ZodError): string {
  return error.issues
    .map((issue) => {
      const where = issue.path.join(".") || "<root>";
      if (issue.code === "invalid_union") {
        const nested = (issue as ZodInvalidUnionIssue).unionErrors
          .flatMap((sub) => sub.issues)
          .map((sub) => `${sub.path.join(".") || "<value>"}: ${sub.message}`)
          .slice(0, 4)
          .join("; ");
        return `${where}: ${nested}`;
      }
      return `${where}: ${issue.message}`;
    })
    .join("; ");
}

export class DuetView {
  readonly container: HTMLElement;
  activePageStateId: string | null = null;

  private readonly hooks: ViewHooks;
  private doc: StateDoc | null = null;
  private expired = false;
  /** psid -> valueKey -> value typed locally but maybe not yet echoed by the server. */
  private readonly localEdits = new Map<string, Map<string, unknown>>();
  /** psid -> itemId -> latest local favorite toggle. */
  private readonly localFavorites = new Map<string, Map<string, boolean>>();
  private dragId: string | null = null;
  private lastHistorySeq = 0;

  private readonly banner: HTMLElement;
  private readonly pendingBadge: HTMLElement;
  private readonly stageBar: HTMLOListElement;
  private readonly nav: HTMLElement;
  private readonly canvas: HTMLElement;
  private readonly historyList: HTMLOListElement;

  constructor(container: HTMLElement, hooks: ViewHooks) {
    this.container = container;
    this.hooks = hooks;

    const app = el("div", "duet-app");
    this.banner = el("div", "duet-banner");
    this.banner.hidden = true;
    this.pendingBadge = el("span", "duet-pending");
    this.pendingBadge.hidden = true;

    // Read-only progress strip: stage changes go through the server, never this bar.
    this.stageBar = el("ol", "duet-stagebar");
    for (const stage of STAGES) {
      const li = el("li", "duet-stage", stage);
      li.dataset.stage = stage;
      this.stageBar.appendChild(li);
    }

    this.nav = el("nav", "duet-nav");
    this.canvas = el("main", "duet-canvas");
    this.historyList = el("ol", "duet-history-list");
    const history = el("aside", "duet-history");
    history.appendChild(el("h2", "duet-history-heading", "Activity"));
    history.appendChild(this.historyList);

    const body = el("div", "duet-body");
    body.append(this.nav, this.canvas, history);
    app.append(this.banner, this.pendingBadge, this.stageBar, body);
    container.replaceChildren(app);
  }

  /** Last successfully applied document, if any. */
  getDoc(): StateDoc | null {
    return this.doc;
  }

  /**
   * Validate and render a state payload. Same-version payloads are no-ops, so
   * applying a payload twice never mutates the DOM a second time.
   */
  apply(payload: unknown): ApplyResult {
    if (this.expired) return { kind: "stale" };

    if (unchangedSchema.safeParse(payload).success) {
      return { kind: "unchanged" };
    }
    const parsed = stateDocSchema.safeParse(payload);
    if (!parsed.success) {
      const detail = describeIssues(parsed.error);
      this.banner.textContent = `Update rejected, keeping current view. ${detail}`;
      this.banner.hidden = false;
      return { kind: "rejected", detail };
    }
    const doc = parsed.data;
    if (this.doc) {
      if (doc.interfaceVersion < this.doc.interfaceVersion) return { kind: "stale" };
      const same =
        doc.interfaceVersion === this.doc.interfaceVersion &&
        doc.taskVersion === this.doc.taskVersion &&
        doc.stage === this.doc.stage;
      if (same) {
        this.doc = doc;
        return { kind: "stale" };
      }
    }

    this.banner.hidden = true;
    this.banner.textContent = "";
    this.doc = doc;
    this.reconcileActivePage();
    this.dropCaughtUpEdits();
    this.renderStageBar();
    this.renderNav();
    this.renderCanvas();
    return { kind: "rendered", interfaceVersion: doc.interfaceVersion };
  }

  /** Append history records to the drawer; agent rows are styled apart from user rows. */
  appendHistory(records: ActionRecord[]): void {
    for (const record of records) {
      if (record.seq <= this.lastHistorySeq) continue;
      this.lastHistorySeq = record.seq;
      const li = el("li", `duet-record duet-record-${record.actor}`);
      li.dataset.actor = record.actor;
      li.dataset.kind = record.kind;
      li.dataset.seq = String(record.seq);
      const head = record.actor === "user" ? "you" : "agent";
      const where = record.target?.pageStateId ? ` @ ${record.target.pageStateId}` : "";
      li.textContent = `#${record.seq} ${head}: ${record.kind}${where}`;
      this.historyList.appendChild(li);
    }
  }

  setPending(count: number): void {
    this.pendingBadge.hidden = count === 0;
    this.pendingBadge.textContent = count === 0 ? "" : `${count} pending`;
  }

  /** Terminal state: the server no longer knows this session. */
  showSessionExpired(): void {
    this.expired = true;
    const box = el("div", "duet-expired");
    box.appendChild(el("h1", undefined, "Session expired"));
    box.appendChild(el("p", undefined, "This session is no longer available. Start a new one."));
    this.container.replaceChildren(box);
  }

  isExpired(): boolean {
    return this.expired;
  }

  // --- internals --------------------------------------------------------------

  /** If the active page vanished, fall back to the navigation's initial group/page. */
  private reconcileActivePage(): void {
    const doc = this.doc!;
    if (this.activePageStateId && doc.pageStates[this.activePageStateId]) return;
    const groups = doc.navigation.pageGroups;
    const initial = groups[doc.navigation.initialGroupIndex] ?? groups[0];
    const candidate = initial?.pages[0]?.pageStateId;
    if (candidate && doc.pageStates[candidate]) {
      this.activePageStateId = candidate;
      return;
    }
    this.activePageStateId = Object.keys(doc.pageStates)[0] ?? null;
  }

  /** Local edits the server has echoed back are no longer pending. */
  private dropCaughtUpEdits(): void {
    const doc = this.doc!;
    for (const [psid, edits] of this.localEdits) {
      const page = doc.pageStates[psid];
      if (!page) continue;
      const values = (page.stateDetail["values"] ?? {}) as Record<string, unknown>;
      for (const [key, val] of edits) {
        if (String(values[key]) === String(val)) edits.delete(key);
      }
      if (edits.size === 0) this.localEdits.delete(psid);
    }
    for (const [psid, toggles] of this.localFavorites) {
      const page = doc.pageStates[psid];
      if (!page) continue;
      const on = new Set((page.stateDetail["favorites"] ?? []) as string[]);
      for (const [itemId, want] of toggles) {
        if (on.has(itemId) === want) toggles.delete(itemId);
      }
      if (toggles.size === 0) this.localFavorites.delete(psid);
    }
  }

  private renderStageBar(): void {
    const current = this.doc!.stage;
    for (const li of Array.from(this.stageBar.children) as HTMLElement[]) {
      li.classList.toggle("duet-stage-current", li.dataset.stage === current);
    }
  }

  private renderNav(): void {
    const doc = this.doc!;
    this.nav.replaceChildren();
    doc.navigation.pageGroups.forEach((group, index) => {
      const box = el("section", "duet-nav-group");
      box.dataset.groupIndex = String(index);
      const head = el("h2", "duet-nav-groupname");
      const icon = el("span", "duet-nav-icon");
      icon.dataset.icon = group.groupicon;
      head.append(icon, document.createTextNode(group.groupname));
      box.appendChild(head);
      const list = el("ul", "duet-nav-pages");
      for (const page of group.pages) {
        const li = el("li");
        const button = el("button", "duet-nav-page", page.pagename);
        button.type = "button";
        button.dataset.pageStateId = page.pageStateId;
        button.classList.toggle("duet-nav-active", page.pageStateId === this.activePageStateId);
        button.addEventListener("click", () => this.navigateTo(page.pageStateId));
        li.appendChild(button);
        list.appendChild(li);
      }
      box.appendChild(list);
      this.nav.appendChild(box);
    });
  }

  private navigateTo(pageStateId: string): void {
    this.hooks.submit({ kind: "navigate", target: { pageStateId } });
    if (this.doc?.pageStates[pageStateId]) {
      this.activePageStateId = pageStateId;
      this.renderNav();
      this.renderCanvas();
    }
  }

  private renderCanvas(): void {
    const doc = this.doc!;
    this.canvas.replaceChildren();
    const psid = this.activePageStateId;
    if (!psid) {
      this.canvas.appendChild(el("p", "duet-empty", "Nothing to show yet."));
      return;
    }
    const page = doc.pageStates[psid];
    if (!page) return;
    this.canvas.dataset.pageStateId = psid;
    this.canvas.dataset.pageType = page.pageType;
    const components = doc.components[psid] ?? [];
    for (const component of components) {
      this.canvas.appendChild(this.renderComponent(component, page));
    }
  }

  private renderComponent(component: Component, page: PageState): HTMLElement {
    if (!isKnownComponent(component)) {
      const box = el("div", "duet-unknown", `Unsupported component: ${component.componentType}`);
      box.dataset.componentKind = component.componentType;
      box.dataset.inert = "true";
      return box;
    }
    const node = this.renderKnown(component, page);
    node.dataset.componentKind = component.componentType;
    return node;
  }

  private renderKnown(component: KnownComponent, page: PageState): HTMLElement {
    switch (component.componentType) {
      case "title": {
        const level = Math.min(6, Math.max(1, component.level));
        return el(`h${level}` as keyof HTMLElementTagNameMap, "duet-title", component.value) as HTMLElement;
      }
      case "price": {
        const text = `${component.prefix} ${formatPrice(component.value)}`.trim();
        return el("span", "duet-price", text);
      }
      case "input_field": {
        const wrap = el("div", "duet-field duet-input");
        wrap.appendChild(el("label", "duet-label", component.label));
        const input = el("input") as HTMLInputElement;
        input.type = "text";
        input.placeholder = component.placeholder;
        input.dataset.valueKey = component.valueKey;
        const current = this.currentValue(page, component.valueKey);
        input.value = current === undefined ? "" : String(current);
        input.addEventListener("input", () => {
          this.rememberEdit(page.pageStateId, component.valueKey, input.value);
        });
        // One record per gesture: commit on change (blur / enter), not per keystroke.
        input.addEventListener("change", () => {
          this.hooks.submit({
            kind: "input",
            target: {
              pageStateId: page.pageStateId,
              componentId: component.valueKey,
              valueKey: component.valueKey,
            },
            payload: { value: input.value },
          });
        });
        wrap.appendChild(input);
        return wrap;
      }
      case "selection": {
        const wrap = el("div", "duet-field duet-selection");
        wrap.appendChild(el("label", "duet-label", component.label));
        const group = el("div", "duet-chips");
        const current = this.currentValue(page, component.valueKey);
        for (const option of component.options) {
          const chip = el("button", "duet-chip", String(option));
          chip.type = "button";
          chip.dataset.value = String(option);
          chip.setAttribute(
            "aria-pressed",
            current !== undefined && String(current) === String(option) ? "true" : "false",
          );
          chip.addEventListener("click", () => {
            this.rememberEdit(page.pageStateId, component.valueKey, option);
            for (const sibling of Array.from(group.children)) {
              sibling.setAttribute("aria-pressed", sibling === chip ? "true" : "false");
            }
            this.hooks.submit({
              kind: "select",
              target: {
                pageStateId: page.pageStateId,
                componentId: component.valueKey,
                valueKey: component.valueKey,
              },
              payload: { value: option },
            });
          });
          group.appendChild(chip);
        }
        wrap.appendChild(group);
        return wrap;
      }
      case "action_button": {
        const button = el("button", "duet-action", component.label);
        button.type = "button";
        button.dataset.actionId = component.actionId;
        button.addEventListener("click", () => {
          this.hooks.submit({
            kind: "click",
            target: { pageStateId: page.pageStateId, componentId: component.actionId },
          });
        });
        return button;
      }
      case "slider": {
        const wrap = el("div", "duet-field duet-slider");
        wrap.appendChild(el("label", "duet-label", component.label));
        const input = el("input") as HTMLInputElement;
        input.type = "range";
        input.min = String(component.min);
        input.max = String(component.max);
        input.step = String(component.step);
        input.dataset.valueKey = component.valueKey;
        const current = this.currentValue(page, component.valueKey);
        input.value = current === undefined ? String(component.min) : String(current);
        const readout = el("output", "duet-slider-value");
        const show = () => {
          readout.textContent = `${input.value}${component.unit ? " " + component.unit : ""}`;
        };
        show();
        // Dragging only moves the readout; the record is emitted once, on release.
        input.addEventListener("input", () => {
          this.rememberEdit(page.pageStateId, component.valueKey, Number(input.value));
          show();
        });
        input.addEventListener("change", () => {
          this.hooks.submit({
            kind: "slide",
            target: {
              pageStateId: page.pageStateId,
              componentId: component.valueKey,
              valueKey: component.valueKey,
            },
            payload: { value: Number(input.value) },
          });
        });
        wrap.append(input, readout);
        return wrap;
      }
      case "date_picker": {
        const wrap = el("div", "duet-field duet-date");
        wrap.appendChild(el("label", "duet-label", component.label));
        const input = el("input") as HTMLInputElement;
        input.type = "date";
        input.dataset.valueKey = component.valueKey;
        const current = this.currentValue(page, component.valueKey);
        input.value = current === undefined ? "" : String(current);
        input.addEventListener("change", () => {
          this.rememberEdit(page.pageStateId, component.valueKey, input.value);
          this.hooks.submit({
            kind: "pick_date",
            target: {
              pageStateId: page.pageStateId,
              componentId: component.valueKey,
              valueKey: component.valueKey,
            },
            payload: { value: input.value },
          });
        });
        wrap.appendChild(input);
        return wrap;
      }
      case "dashboard": {
        const box = el("div", "duet-dashboard");
        for (const item of component.items) {
          box.appendChild(this.renderDashboardItem(item, page));
        }
        return box;
      }
      case "navigation_card": {
        const card = el("article", "duet-navcard");
        card.dataset.targetPage = component.pageStateId;
        card.dataset.orderId = component.pageStateId;
        card.setAttribute("draggable", "true");
        card.appendChild(el("h3", "duet-navcard-title", component.title));
        if (component.summary) card.appendChild(el("p", "duet-navcard-summary", component.summary));
        card.addEventListener("click", () => this.navigateTo(component.pageStateId));
        this.bindDrag(card, () => this.canvas, ".duet-navcard[data-order-id]");
        return card;
      }
      case "card_view":
        return this.renderCardView(component, page);
    }
  }

  private renderDashboardItem(item: DashboardItem, page: PageState): HTMLElement {
    const row = el("div", "duet-dash-item");
    row.dataset.dashboardId = item.id;
    row.appendChild(el("span", "duet-dash-label", item.label));
    const shown = `${String(item.value)}${item.unit ? " " + item.unit : ""}`;
    if (item.editOptions && item.editOptions.length > 0) {
      const select = el("select", "duet-dash-edit") as HTMLSelectElement;
      for (const option of item.editOptions) {
        const opt = el("option", undefined, String(option)) as HTMLOptionElement;
        opt.value = String(option);
        select.appendChild(opt);
      }
      select.value = String(item.value);
      select.addEventListener("change", () => {
        this.hooks.submit({
          kind: "select",
          target: { pageStateId: page.pageStateId, componentId: "dashboard", valueKey: item.id },
          payload: { value: select.value },
        });
      });
      row.appendChild(select);
    } else {
      row.appendChild(el("span", "duet-dash-value", shown));
    }
    return row;
  }

  private renderCardView(config: CardViewConfig, page: PageState): HTMLElement {
    const box = el("div", "duet-cardview");
    box.dataset.reorderZone = "true";
    const items = (page.stateDetail[config.itemDataKey] ?? []) as ItemRecord[];
    const favoritesOn = new Set((page.stateDetail["favorites"] ?? []) as string[]);
    const localToggles = this.localFavorites.get(page.pageStateId);

    if (config.isSortEnabled) {
      const sort = el("select", "duet-sort") as HTMLSelectElement;
      for (const [value, label] of [
        ["", "Unsorted"],
        ["price_asc", "Price, low to high"],
        ["price_desc", "Price, high to low"],
      ]) {
        const opt = el("option", undefined, label) as HTMLOptionElement;
        opt.value = value!;
        sort.appendChild(opt);
      }
      sort.addEventListener("change", () => {
        if (!sort.value) return;
        this.hooks.submit({
          kind: "click",
          target: { pageStateId: page.pageStateId, componentId: config.itemDataKey },
          payload: { sort: sort.value },
        });
      });
      box.appendChild(sort);
    }

    const list = el("div", "duet-cards");
    for (const item of items) {
      if (item === null || typeof item !== "object") continue;
      const itemId = String(item.id ?? "");
      const card = el("article", "duet-card");
      card.dataset.itemId = itemId;
      card.dataset.orderId = itemId;
      card.setAttribute("draggable", "true");

      for (const attr of config.displayedAttributes) {
        if (!(attr in item)) continue;
        const row = el("div", "duet-attr");
        row.dataset.attr = attr;
        row.appendChild(el("span", "duet-attr-name", attr));
        row.appendChild(el("span", "duet-attr-value", String(item[attr] ?? "")));
        card.appendChild(row);
      }

      if (config.enableFavorites) {
        const favored = localToggles?.get(itemId) ?? favoritesOn.has(itemId);
        const fav = el("button", "duet-favorite", favored ? "♥" : "♡");
        fav.type = "button";
        fav.setAttribute("aria-pressed", favored ? "true" : "false");
        fav.addEventListener("click", (event) => {
          event.stopPropagation();
          const next = !(
            this.localFavorites.get(page.pageStateId)?.get(itemId) ?? favoritesOn.has(itemId)
          );
          let toggles = this.localFavorites.get(page.pageStateId);
          if (!toggles) {
            toggles = new Map();
            this.localFavorites.set(page.pageStateId, toggles);
          }
          toggles.set(itemId, next);
          fav.textContent = next ? "♥" : "♡";
          fav.setAttribute("aria-pressed", next ? "true" : "false");
          this.hooks.submit({
            kind: "favorite",
            target: { pageStateId: page.pageStateId, componentId: config.itemDataKey },
            payload: { itemId, favorited: next },
          });
        });
        card.appendChild(fav);
      }

      // Committing to an item is its own record kind, distinct from inspecting it.
      const confirm = el("button", "duet-confirm", "Confirm");
      confirm.type = "button";
      confirm.addEventListener("click", (event) => {
        event.stopPropagation();
        this.hooks.submit({
          kind: "confirm",
          target: { pageStateId: page.pageStateId },
          payload: { itemId },
        });
      });
      card.appendChild(confirm);

      card.addEventListener("click", () => {
        this.hooks.submit({
          kind: "click",
          target: { pageStateId: page.pageStateId, componentId: config.itemDataKey },
          payload: { itemId },
        });
      });
      this.bindDrag(card, () => list, ".duet-card[data-order-id]");
      list.appendChild(card);
    }
    box.appendChild(list);
    return box;
  }

  /**
   * Drag-reorder over sibling cards: the drop emits exactly one record carrying
   * the zone's full new order, regardless of how far the card traveled.
   */
  private bindDrag(card: HTMLElement, zone: () => HTMLElement, selector: string): void {
    card.addEventListener("dragstart", () => {
      this.dragId = card.dataset.orderId ?? null;
    });
    card.addEventListener("dragover", (event) => event.preventDefault());
    card.addEventListener("drop", (event) => {
      event.preventDefault();
      const dragged = this.dragId;
      this.dragId = null;
      const targetId = card.dataset.orderId;
      if (!dragged || !targetId || dragged === targetId) return;
      const container = zone();
      const siblings = Array.from(container.querySelectorAll<HTMLElement>(selector));
      const ids = siblings.map((node) => node.dataset.orderId!).filter((id) => id !== dragged);
      const at = ids.indexOf(targetId);
      ids.splice(at < 0 ? ids.length : at, 0, dragged);
      this.hooks.submit({ kind: "reorder", payload: { newOrder: ids } });
      // Mirror the order locally, but only in a container that holds nothing
      // else; mixed canvases wait for the server's re-render instead.
      if (container.children.length === siblings.length) {
        const nodes = new Map(siblings.map((node) => [node.dataset.orderId!, node]));
        for (const id of ids) {
          const node = nodes.get(id);
          if (node) container.appendChild(node);
        }
      }
    });
    card.addEventListener("dragend", () => {
      this.dragId = null;
    });
  }

  private rememberEdit(psid: string, valueKey: string, value: unknown): void {
    let edits = this.localEdits.get(psid);
    if (!edits) {
      edits = new Map();
      this.localEdits.set(psid, edits);
    }
    edits.set(valueKey, value);
  }

  /** Local pending edit wins over the server value until the server echoes it. */
  private currentValue(page: PageState, valueKey: string): unknown {
    const edits = this.localEdits.get(page.pageStateId);
    if (edits && edits.has(valueKey)) return edits.get(valueKey);
    const values = page.stateDetail["values"];
    if (values && typeof values === "object") {
      return (values as Record<string, unknown>)[valueKey];
    }
    return undefined;
  }
}

/** Build a view over `container` and apply the first payload. */
export function render(payload: unknown, container: HTMLElement, hooks: ViewHooks): DuetView {
  const view = new DuetView(container, hooks);
  view.apply(payload);
  return view;
}

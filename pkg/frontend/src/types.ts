/*
  Wire types for the duet HTTP API.

  Every shape here mirrors the server's published schema bundle. Components are
  validated strictly when their kind is known; unknown kinds are preserved as-is
  so the renderer can show a labeled placeholder instead of crashing.
*/

import { z } from "zod";

export const STAGES = [
  "Define",
  "Empathize",
  "Plan",
  "Explore",
  "Refine",
  "Duet",
] as const;

export type Stage = (typeof STAGES)[number];

export const ACTION_KINDS = [
  "input",
  "select",
  "click",
  "slide",
  "pick_date",
  "reorder",
  "favorite",
  "confirm",
  "navigate",
  "agent_search",
  "agent_recommend",
  "agent_commit_task",
  "agent_commit_interface",
  "stage_change",
  "loop_failed",
] as const;

export type ActionKind = (typeof ACTION_KINDS)[number];

// --- components -----------------------------------------------------------

const cardViewSchema = z.object({
  componentType: z.literal("card_view"),
  pageStateId: z.string(),
  itemDataKey: z.string(),
  displayedAttributes: z.array(z.string()).default([]),
  enableFavorites: z.boolean().default(false),
  isSortEnabled: z.boolean().default(false),
});

const priceSchema = z.object({
  componentType: z.literal("price"),
  value: z.union([z.number(), z.string()]),
  prefix: z.string().default(""),
});

const titleSchema = z.object({
  componentType: z.literal("title"),
  value: z.string(),
  level: z.number().int().default(2),
});

const inputFieldSchema = z.object({
  componentType: z.literal("input_field"),
  label: z.string(),
  placeholder: z.string().default(""),
  valueKey: z.string(),
});

const selectionSchema = z.object({
  componentType: z.literal("selection"),
  label: z.string(),
  options: z.array(z.unknown()).default([]),
  valueKey: z.string(),
});

const actionButtonSchema = z.object({
  componentType: z.literal("action_button"),
  label: z.string(),
  actionId: z.string(),
});

const sliderSchema = z.object({
  componentType: z.literal("slider"),
  label: z.string(),
  min: z.number(),
  max: z.number(),
  step: z.number().default(1),
  valueKey: z.string(),
  unit: z.string().default(""),
});

const datePickerSchema = z.object({
  componentType: z.literal("date_picker"),
  label: z.string(),
  valueKey: z.string(),
});

const dashboardItemSchema = z.object({
  id: z.string(),
  label: z.string(),
  value: z.unknown(),
  type: z.enum(["number", "string", "date"]),
  unit: z.string().nullish(),
  editOptions: z.array(z.unknown()).nullish(),
});

const dashboardSchema = z.object({
  componentType: z.literal("dashboard"),
  items: z.array(dashboardItemSchema).default([]),
});

const navigationCardSchema = z.object({
  componentType: z.literal("navigation_card"),
  pageStateId: z.string(),
  title: z.string(),
  summary: z.string().default(""),
});

export const knownComponentSchema = z.discriminatedUnion("componentType", [
  cardViewSchema,
  priceSchema,
  titleSchema,
  inputFieldSchema,
  selectionSchema,
  actionButtonSchema,
  sliderSchema,
  datePickerSchema,
  dashboardSchema,
  navigationCardSchema,
]);

export const KNOWN_COMPONENT_KINDS: ReadonlySet<string> = new Set(
  knownComponentSchema.options.map((o) => o.shape.componentType.value),
);

export type KnownComponent = z.infer<typeof knownComponentSchema>;

export interface UnknownComponent {
  componentType: string;
  [key: string]: unknown;
}

// A kind we have never heard of passes through untouched for the renderer to
// placeholder; a known kind with a bad shape is a schema mismatch, reported
// with the precise failing field path.
export const componentSchema = z
  .object({ componentType: z.string() })
  .passthrough()
  .superRefine((c, ctx) => {
    if (!KNOWN_COMPONENT_KINDS.has(c.componentType)) return;
    const result = knownComponentSchema.safeParse(c);
    if (!result.success) {
      for (const issue of result.error.issues) ctx.addIssue(issue);
    }
  })
  .transform((c): KnownComponent | UnknownComponent => {
    return KNOWN_COMPONENT_KINDS.has(c.componentType)
      ? knownComponentSchema.parse(c)
      : (c as UnknownComponent);
  });

export type Component = KnownComponent | UnknownComponent;
export type CardViewConfig = z.infer<typeof cardViewSchema>;
export type DashboardItem = z.infer<typeof dashboardItemSchema>;

export function isKnownComponent(c: Component): c is KnownComponent {
  return KNOWN_COMPONENT_KINDS.has(c.componentType);
}

// --- navigation and pages ---------------------------------------------------

export const navigationPageSchema = z.object({
  pagename: z.string(),
  pageStateId: z.string(),
});

export const pageGroupSchema = z.object({
  groupname: z.string(),
  groupicon: z.string(),
  pages: z.array(navigationPageSchema).default([]),
});

export const navigationSchema = z.object({
  pageGroups: z.array(pageGroupSchema).default([]),
  initialGroupIndex: z.number().int().default(0),
});

export const pageStateSchema = z.object({
  sessionId: z.string(),
  pageStateId: z.string(),
  pageType: z.enum(["list", "detail", "form", "summary", "confirmation"]),
  stateDetail: z.record(z.unknown()).default({}),
  lastUpdated: z.union([z.number(), z.string()]).nullish(),
});

export type Navigation = z.infer<typeof navigationSchema>;
export type PageState = z.infer<typeof pageStateSchema>;

// --- state endpoint -----------------------------------------------------------

export const stateDocSchema = z.object({
  stage: z.enum(STAGES),
  navigation: navigationSchema,
  pageStates: z.record(pageStateSchema),
  components: z.record(z.array(componentSchema)),
  taskVersion: z.number().int(),
  interfaceVersion: z.number().int(),
});

export const unchangedSchema = z.object({
  unchanged: z.literal(true),
  interfaceVersion: z.number().int(),
});

export type StateDoc = z.infer<typeof stateDocSchema>;
export type UnchangedDoc = z.infer<typeof unchangedSchema>;

// --- actions -------------------------------------------------------------------

export interface ActionTarget {
  pageStateId?: string;
  componentId?: string;
  valueKey?: string;
}

/** Body of POST /sessions/{id}/actions: a record minus seq/actor/at. */
export interface ActionBody {
  kind: ActionKind;
  target?: ActionTarget;
  payload?: Record<string, unknown>;
}

export const actionRecordSchema = z.object({
  seq: z.number().int(),
  actor: z.enum(["user", "agent"]),
  kind: z.enum(ACTION_KINDS),
  target: z
    .object({
      pageStateId: z.string().nullish(),
      componentId: z.string().nullish(),
      valueKey: z.string().nullish(),
    })
    .nullish(),
  payload: z.record(z.unknown()).default({}),
  at: z.union([z.number(), z.string()]),
});

export const historyResponseSchema = z.object({
  records: z.array(actionRecordSchema),
  latestSeq: z.number().int(),
});

export type ActionRecord = z.infer<typeof actionRecordSchema>;
export type HistoryResponse = z.infer<typeof historyResponseSchema>;

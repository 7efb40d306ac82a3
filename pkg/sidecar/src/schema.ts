/**
 * Interchange schema (zod) for the emitted proposals document plus the
 * subset of the run config this sidecar consumes.
 *
 * The document schema is strict: emitting any field outside it is a bug.
 * config_echo is an opaque pass-through of the exact config object the
 * sidecar was invoked with.
 */

import { z } from "zod";

const unit = z.number().min(0).max(1);

export const BoxSchema = z
  .object({
    x0: z.number().int().min(0),
    y0: z.number().int().min(0),
    x1: z.number().int().min(0),
    y1: z.number().int().min(0),
  })
  .strict()
  .refine((b) => b.x0 < b.x1 && b.y0 < b.y1, { message: "degenerate box" });

export const MaskSchema = z
  .object({
    width: z.number().int().positive(),
    height: z.number().int().positive(),
    rle: z.array(z.number().int().min(0)),
  })
  .strict()
  .refine((m) => m.rle.reduce((a, b) => a + b, 0) === m.width * m.height, {
    message: "run lengths must sum to width*height",
  })
  .refine((m) => m.rle.slice(1).every((r) => r > 0), {
    message: "only the leading run may be zero",
  });

export const ProposalSchema = z
  .object({
    id: z.number().int().min(0),
    mask: MaskSchema,
    bbox: BoxSchema,
    predicted_iou: unit,
    stability_score: unit,
  })
  .strict();

export const DetectionSchema = z
  .object({
    bbox: BoxSchema,
    phrase: z.string().min(1),
    confidence: unit,
  })
  .strict();

export const DocumentSchema = z
  .object({
    image: z
      .object({
        width: z.number().int().positive(),
        height: z.number().int().positive(),
      })
      .strict(),
    proposals: z.array(ProposalSchema),
    detections: z.array(DetectionSchema),
    config_echo: z.record(z.string(), z.unknown()),
  })
  .strict();

export type ProposalsDocument = z.infer<typeof DocumentSchema>;

export const PromptSchema = z.object({
  text: z.string().min(1),
  role: z.enum(["keep", "exclude"]),
  box_threshold: unit,
  text_threshold: unit,
});

/** Fields of the run config the sidecar acts on; everything else is echoed
 * untouched. loose() keeps unknown keys out of validation errors. */
export const SidecarConfigSchema = z
  .object({
    points_per_side: z.number().int().positive().default(128),
    points_per_batch: z.number().int().positive().default(128),
    pred_iou_thresh: unit.default(0.7),
    crop_n_points_downscale_factor: z.number().int().positive().default(1),
    prompts: z.array(PromptSchema).min(1),
    checkpoints: z.record(z.string(), z.string()).optional(),
  })
  .loose();

export type SidecarConfig = z.infer<typeof SidecarConfigSchema>;

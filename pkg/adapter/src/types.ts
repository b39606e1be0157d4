/** Shared adapter types and error classes. */

export type Feature = 'cr' | 'pupil' | 'iris' | 'sclera';

export const FEATURE_BITS: Record<Feature, number> = {
  cr: 0x01,
  pupil: 0x02,
  iris: 0x04,
  sclera: 0x08,
};

export interface PromptPoint {
  x: number;
  y: number;
  feature: 'pupil' | 'iris' | 'sclera';
  polarity: 'positive' | 'negative';
}

export interface PromptSet {
  frame: number;
  points: PromptPoint[];
}

export interface GrayFrame {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major
}

export interface AdapterJob {
  videoDir: string;
  promptsPath?: string;
  concept?: string;
  model: string;
  outDir: string;
  chunkLength: number; // 0: whole video in one chunk
  frameRate: number;
}

/** Per-frame output: one bitfield byte per pixel (FEATURE_BITS). */
export interface LabelFrame {
  width: number;
  height: number;
  labels: Uint8Array;
}

export class ModelError extends Error {}

export class DecodeError extends Error {}

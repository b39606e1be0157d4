/** Prompt-file loading against the toolkit's prompt JSON interface. */

import { readFileSync } from 'node:fs';

import { PromptPoint, PromptSet } from './types.js';

const FEATURES = new Set(['pupil', 'iris', 'sclera']);
const POLARITIES = new Set(['positive', 'negative']);

export function loadPromptSet(path: string): PromptSet {
  const data = JSON.parse(readFileSync(path, 'utf-8'));
  if (typeof data !== 'object' || data === null || !Array.isArray(data.points)) {
    throw new Error(`${path}: expected {"frame", "points": [...]}`);
  }
  const points: PromptPoint[] = data.points.map((p: any, i: number) => {
    if (
      typeof p.x !== 'number' ||
      typeof p.y !== 'number' ||
      !FEATURES.has(p.feature) ||
      !POLARITIES.has(p.polarity)
    ) {
      throw new Error(`${path}: bad prompt point at index ${i}`);
    }
    return { x: p.x, y: p.y, feature: p.feature, polarity: p.polarity };
  });
  return { frame: Number(data.frame ?? 0), points };
}

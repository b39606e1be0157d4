/** Segmenter interface and the deterministic stub implementation.
 *
 * The adapter is a format bridge: a segmenter receives frames (in chunks,
 * with its own state carried across chunk boundaries) and returns one label
 * bitfield per frame. It must not post-process its masks; blob selection and
 * tracking belong to the evaluation toolkit.
 */

import { FEATURE_BITS, GrayFrame, LabelFrame, ModelError, PromptSet } from './types.js';

export interface Segmenter<State = unknown> {
  /** Called once before the first chunk. */
  init(width: number, height: number): State;
  /** Segment one frame; returns the label bitfield and the new state. */
  segmentFrame(state: State, frame: GrayFrame, frameIndex: number): { labels: LabelFrame; state: State };
}

export interface SegmenterRequest {
  model: string;
  prompts?: PromptSet;
  concept?: string;
}

function drawDisc(labels: Uint8Array, width: number, height: number, cx: number, cy: number, r: number, bit: number): void {
  const x0 = Math.max(0, Math.floor(cx - r - 1));
  const x1 = Math.min(width, Math.ceil(cx + r + 1));
  const y0 = Math.max(0, Math.floor(cy - r - 1));
  const y1 = Math.min(height, Math.ceil(cy + r + 1));
  for (let y = y0; y < y1; y += 1) {
    for (let x = x0; x < x1; x += 1) {
      const dx = x + 0.5 - cx;
      const dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r * r) {
        labels[y * width + x] |= bit;
      }
    }
  }
}

/**
 * stub-disc: echoes prompt-centered discs (visual mode) or two fixed discs
 * OR-ed into the pupil bit (concept mode). Stateless and deterministic, so
 * chunked and unchunked runs must agree byte for byte.
 */
class StubDiscSegmenter implements Segmenter<null> {
  constructor(private readonly request: SegmenterRequest) {}

  init(): null {
    return null;
  }

  segmentFrame(state: null, frame: GrayFrame): { labels: LabelFrame; state: null } {
    const labels = new Uint8Array(frame.width * frame.height);
    if (this.request.prompts) {
      for (const p of this.request.prompts.points) {
        if (p.polarity !== 'positive') continue;
        drawDisc(labels, frame.width, frame.height, p.x, p.y, 5, FEATURE_BITS[p.feature]);
      }
    } else {
      // every returned object for the concept lands in the pupil bit
      const cx = frame.width / 2;
      const cy = frame.height / 2;
      drawDisc(labels, frame.width, frame.height, cx, cy, 6, FEATURE_BITS.pupil);
      drawDisc(labels, frame.width, frame.height, cx + frame.width / 8, cy + frame.height / 8, 4, FEATURE_BITS.pupil);
    }
    return { labels: { width: frame.width, height: frame.height, labels }, state: null };
  }
}

export function createSegmenter(request: SegmenterRequest): Segmenter {
  if (request.model === 'stub-disc') {
    return new StubDiscSegmenter(request);
  }
  throw new ModelError(`model not available: ${request.model}`);
}

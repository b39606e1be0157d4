/** Job orchestration: chunked iteration over the video, PGM mask output,
 * manifest written last as the completion marker. */

import { mkdirSync, readdirSync, rmSync, writeFileSync, existsSync } from 'node:fs';
import { join } from 'node:path';

import { readPgm, writePgm } from './pgm.js';
import { loadPromptSet } from './prompts.js';
import { createSegmenter } from './segmenter.js';
import { AdapterJob, DecodeError, LabelFrame } from './types.js';

export function listVideoFrames(videoDir: string): string[] {
  let names: string[];
  try {
    names = readdirSync(videoDir);
  } catch (err) {
    throw new DecodeError(`cannot read video directory ${videoDir}: ${err}`);
  }
  const frames = names.filter((n) => n.endsWith('.pgm')).sort();
  if (frames.length === 0) {
    throw new DecodeError(`no .pgm frames in ${videoDir}`);
  }
  return frames.map((n) => join(videoDir, n));
}

function writeManifest(job: AdapterJob, width: number, height: number, frameCount: number): void {
  const manifest = {
    frame_count: frameCount,
    frame_rate: job.frameRate,
    height,
    video_id: job.videoDir.replace(/\/+$/, '').split('/').pop() ?? 'video',
    width,
  };
  writeFileSync(join(job.outDir, 'manifest.json'), JSON.stringify(manifest, null, 2) + '\n');
}

/** Run one adapter job; returns the output directory. Partial output is
 * removed on failure, so a manifest.json implies a complete archive. */
export function runJob(job: AdapterJob): string {
  if ((job.promptsPath === undefined) === (job.concept === undefined)) {
    throw new Error('exactly one of --prompts or --concept must be given');
  }
  // resolve everything fallible before touching the output directory
  const segmenter = createSegmenter({
    model: job.model,
    prompts: job.promptsPath ? loadPromptSet(job.promptsPath) : undefined,
    concept: job.concept,
  });
  const framePaths = listVideoFrames(job.videoDir);
  const first = readPgm(framePaths[0]);
  const { width, height } = first;

  mkdirSync(job.outDir, { recursive: true });
  try {
    let state = segmenter.init(width, height);
    const chunk = job.chunkLength > 0 ? job.chunkLength : framePaths.length;
    let written = 0;
    for (let start = 0; start < framePaths.length; start += chunk) {
      const end = Math.min(start + chunk, framePaths.length);
      for (let i = start; i < end; i += 1) {
        const frame = readPgm(framePaths[i]);
        if (frame.width !== width || frame.height !== height) {
          throw new DecodeError(
            `${framePaths[i]}: frame is ${frame.width}x${frame.height}, video is ${width}x${height}`,
          );
        }
        const result = segmenter.segmentFrame(state, frame, i);
        state = result.state;
        writeLabelFrame(job.outDir, i, result.labels);
        written += 1;
      }
    }
    writeManifest(job, width, height, written);
  } catch (err) {
    rmSync(job.outDir, { recursive: true, force: true });
    throw err;
  }
  return job.outDir;
}

function writeLabelFrame(outDir: string, frameIndex: number, frame: LabelFrame): void {
  const name = `frame_${String(frameIndex).padStart(8, '0')}.pgm`;
  writePgm(join(outDir, name), frame.width, frame.height, frame.labels);
}

export function outputExists(outDir: string): boolean {
  return existsSync(join(outDir, 'manifest.json'));
}

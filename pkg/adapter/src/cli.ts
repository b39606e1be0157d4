#!/usr/bin/env node
/** CLI: eyeseg-adapter --video DIR (--prompts FILE | --concept STRING)
 *        --model NAME --out DIR [--chunk N] [--fps HZ] */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { runJob } from './run.js';

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .option('video', { type: 'string', demandOption: true, describe: 'directory of P5 .pgm frames' })
    .option('prompts', { type: 'string', describe: 'prompt JSON (visual mode)' })
    .option('concept', { type: 'string', describe: 'concept string (concept mode)' })
    .option('model', { type: 'string', demandOption: true })
    .option('out', { type: 'string', demandOption: true })
    .option('chunk', { type: 'number', default: 0, describe: 'frames per chunk (0: whole video)' })
    .option('fps', { type: 'number', default: 30, describe: 'frame rate recorded in the manifest' })
    .strict()
    .parse();

  try {
    const out = runJob({
      videoDir: args.video,
      promptsPath: args.prompts,
      concept: args.concept,
      model: args.model,
      outDir: args.out,
      chunkLength: args.chunk,
      frameRate: args.fps,
    });
    process.stderr.write(`wrote mask archive to ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
}

const invoked = process.argv[1] ?? '';
if (invoked.endsWith('cli.js') || invoked.endsWith('eyeseg-adapter')) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}

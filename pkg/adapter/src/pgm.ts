/** Binary P5 graymap reading/writing (maxval 255). */

import { readFileSync, writeFileSync } from 'node:fs';

import { DecodeError, GrayFrame } from './types.js';

export function parsePgm(data: Buffer, source: string): GrayFrame {
  const tokens: string[] = [];
  let pos = 0;
  while (tokens.length < 4 && pos < data.length) {
    while (pos < data.length && isSpace(data[pos])) pos += 1;
    if (data[pos] === 0x23) {
      // '#' comment runs to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos += 1;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos += 1;
    tokens.push(data.subarray(start, pos).toString('ascii'));
  }
  if (tokens.length < 4 || tokens[0] !== 'P5') {
    throw new DecodeError(`${source}: not a binary P5 graymap`);
  }
  const width = Number(tokens[1]);
  const height = Number(tokens[2]);
  const maxval = Number(tokens[3]);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new DecodeError(`${source}: bad dimensions ${tokens[1]}x${tokens[2]}`);
  }
  if (maxval !== 255) {
    throw new DecodeError(`${source}: expected maxval 255, got ${tokens[3]}`);
  }
  pos += 1; // single whitespace byte after maxval
  const raster = data.subarray(pos, pos + width * height);
  if (raster.length !== width * height) {
    throw new DecodeError(`${source}: truncated raster`);
  }
  return { width, height, pixels: new Uint8Array(raster) };
}

export function readPgm(path: string): GrayFrame {
  return parsePgm(readFileSync(path), path);
}

export function writePgm(path: string, width: number, height: number, pixels: Uint8Array): void {
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, 'ascii');
  writeFileSync(path, Buffer.concat([header, Buffer.from(pixels)]));
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0b || byte === 0x0c;
}

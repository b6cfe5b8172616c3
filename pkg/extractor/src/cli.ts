#!/usr/bin/env node
/**
 * cbem-extract: build CBEM embedding bundles and emit prompt templates.
 *
 *   cbem-extract extract --dataset DIR --concepts-dir DIR --out DIR
 *                        [--encoder hash-512] [--tasks N] [--dataset-name S]
 *                        [--class-template S] [--concept-template S]
 *   cbem-extract templates --out DIR [--kind KIND]
 *
 * Exit codes mirror the engine CLI: 0 success, 1 runtime failure, 2 bad
 * usage, 3 bad or missing data. Errors are one `error: <kind>: <message>`
 * line on stderr.
 */
import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import { pathToFileURL } from 'node:url';
import { parseArgs } from 'node:util';

import { DatasetError, scanDataset } from './dataset.js';
import { createEncoder } from './encoder.js';
import { extractBundle } from './extract.js';
import { GENERIC_TEMPLATE, promptFor, templateKinds } from './templates.js';

class UsageError extends Error {}

const USAGE = `usage: cbem-extract <extract|templates> [options]

extract    --dataset DIR --concepts-dir DIR --out DIR [--encoder hash-512]
           [--tasks N] [--dataset-name NAME] [--class-template TPL]
           [--concept-template TPL]
templates  --out DIR [--kind KIND]`;

function cmdExtract(argv: string[]): Record<string, unknown> {
  const { values } = parseArgs({
    args: argv,
    options: {
      'dataset': { type: 'string' },
      'concepts-dir': { type: 'string' },
      'out': { type: 'string' },
      'encoder': { type: 'string', default: 'hash-512' },
      'tasks': { type: 'string', default: '1' },
      'dataset-name': { type: 'string' },
      'class-template': { type: 'string' },
      'concept-template': { type: 'string' },
    },
  });
  for (const required of ['dataset', 'concepts-dir', 'out'] as const) {
    if (values[required] === undefined) {
      throw new UsageError(`--${required} is required`);
    }
  }
  const tasks = Number(values['tasks']);
  if (!Number.isInteger(tasks) || tasks < 1) {
    throw new UsageError(`--tasks must be a positive integer, got ${values['tasks']}`);
  }
  let encoder;
  try {
    encoder = createEncoder(values['encoder']!);
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  const manifest = scanDataset(values['dataset']!, values['concepts-dir']!,
                               values['dataset-name']);
  const summary = extractBundle(manifest, encoder, values['out']!, {
    tasks,
    classTemplate: values['class-template'],
    conceptTemplate: values['concept-template'],
  });
  return { ...summary };
}

function cmdTemplates(argv: string[]): Record<string, unknown> {
  const { values } = parseArgs({
    args: argv,
    options: {
      'out': { type: 'string' },
      'kind': { type: 'string' },
    },
  });
  if (values['out'] === undefined) {
    throw new UsageError('--out is required');
  }
  mkdirSync(values['out'], { recursive: true });
  const kinds = values['kind'] !== undefined ? [values['kind']] : [...templateKinds(), 'generic'];
  const written: string[] = [];
  for (const kind of kinds) {
    const text = kind === 'generic' ? GENERIC_TEMPLATE : promptFor(kind);
    const file = join(values['out'], `${kind}.prompt.txt`);
    writeFileSync(file, text + '\n');
    written.push(file);
  }
  return { written };
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    let summary: Record<string, unknown>;
    if (command === 'extract') {
      summary = cmdExtract(rest);
    } else if (command === 'templates') {
      summary = cmdTemplates(rest);
    } else {
      throw new UsageError(command === undefined
        ? 'missing command' : `unknown command ${JSON.stringify(command)}`);
    }
    const keys = Object.keys(summary).sort();
    console.log(JSON.stringify(Object.fromEntries(keys.map(k => [k, summary[k]]))));
    return 0;
  } catch (err) {
    if (err instanceof UsageError ||
        (err instanceof TypeError && 'code' in err &&
         String((err as NodeJS.ErrnoException).code).startsWith('ERR_PARSE_ARGS'))) {
      process.stderr.write(`error: usage: ${(err as Error).message}\n${USAGE}\n`);
      return 2;
    }
    if (err instanceof DatasetError ||
        (err instanceof Error && 'code' in err &&
         (err as NodeJS.ErrnoException).code === 'ENOENT')) {
      process.stderr.write(`error: data: ${(err as Error).message}\n`);
      return 3;
    }
    process.stderr.write(`error: runtime: ${(err as Error).message}\n`);
    return 1;
  }
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}

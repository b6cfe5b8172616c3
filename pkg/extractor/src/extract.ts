/**
 * Bundle assembly: encode a scanned dataset into the CBEM + manifest.json
 * interchange layout consumed by the training engine.
 *
 * Row order is deterministic: every class's training images in class-id
 * order, then every class's test images. Raw image bytes never enter the
 * bundle, only their embeddings. Text embeddings default to the bare
 * string; a template with a `{text}` placeholder can wrap class names or
 * concepts before encoding.
 */
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { writeBlobFile, type Matrix } from './cbem.js';
import { type ExtractionManifest } from './dataset.js';
import { type Encoder } from './encoder.js';

export interface ExtractOptions {
  /** Number of contiguous tasks to split the class list into (default 1). */
  tasks?: number;
  /** Template wrapped around class names before encoding, `{text}` placeholder. */
  classTemplate?: string;
  /** Template wrapped around concept strings before encoding. */
  conceptTemplate?: string;
}

export interface ExtractSummary {
  out: string;
  dataset: string;
  encoder: string;
  classes: number;
  concepts: number;
  samples: number;
  tasks: number;
}

function applyTemplate(template: string | undefined, text: string): string {
  if (template === undefined) return text;
  if (!template.includes('{text}')) {
    throw new Error(`text template must contain the {text} placeholder, got ${JSON.stringify(template)}`);
  }
  return template.replaceAll('{text}', text);
}

function stack(rows: Float64Array[], dim: number): Matrix {
  const data = new Float64Array(rows.length * dim);
  rows.forEach((row, i) => data.set(row, i * dim));
  return { rows: rows.length, cols: dim, data };
}

function column(values: number[]): Matrix {
  return { rows: values.length, cols: 1, data: Float64Array.from(values) };
}

function taskPlan(nClasses: number, nTasks: number): number[][] {
  if (!Number.isInteger(nTasks) || nTasks < 1 || nTasks > nClasses) {
    throw new Error(`tasks must be between 1 and ${nClasses}, got ${nTasks}`);
  }
  const base = Math.floor(nClasses / nTasks);
  const extra = nClasses % nTasks;
  const plan: number[][] = [];
  let next = 0;
  for (let t = 0; t < nTasks; t++) {
    const size = base + (t < extra ? 1 : 0);
    plan.push(Array.from({ length: size }, (_, i) => next + i));
    next += size;
  }
  return plan;
}

/** JSON.stringify with recursively sorted object keys, for stable output. */
function stableJson(value: unknown): string {
  const sorted = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(sorted);
    if (v !== null && typeof v === 'object') {
      return Object.fromEntries(
        Object.keys(v as Record<string, unknown>).sort()
          .map(k => [k, sorted((v as Record<string, unknown>)[k])]));
    }
    return v;
  };
  return JSON.stringify(sorted(value), null, 2) + '\n';
}

export function extractBundle(manifest: ExtractionManifest, encoder: Encoder,
                              outDir: string, options: ExtractOptions = {}): ExtractSummary {
  const imageRows: Float64Array[] = [];
  const labels: number[] = [];
  const split: number[] = [];
  for (const flag of [0, 1] as const) {
    manifest.classes.forEach((entry, classId) => {
      const files = flag === 0 ? entry.trainFiles : entry.testFiles;
      for (const file of files) {
        imageRows.push(encoder.encodeImage(readFileSync(file)));
        labels.push(classId);
        split.push(flag);
      }
    });
  }

  const classNames = manifest.classes.map(e => e.name);
  const nameRows = classNames.map(
    name => encoder.encodeText(applyTemplate(options.classTemplate, name)));

  const concepts: string[] = [];
  const conceptClassMap: number[] = [];
  const conceptRows: Float64Array[] = [];
  manifest.classes.forEach((entry, classId) => {
    for (const concept of entry.concepts) {
      concepts.push(concept);
      conceptClassMap.push(classId);
      conceptRows.push(encoder.encodeText(applyTemplate(options.conceptTemplate, concept)));
    }
  });

  const plan = taskPlan(classNames.length, options.tasks ?? 1);

  mkdirSync(outDir, { recursive: true });
  const blobs: Record<string, Matrix> = {
    'images': stack(imageRows, encoder.dim),
    'labels': column(labels),
    'split': column(split),
    'class_name_embeddings': stack(nameRows, encoder.dim),
    'concept_embeddings': stack(conceptRows, encoder.dim),
  };
  const table: Record<string, { file: string; rows: number; cols: number }> = {};
  for (const [name, matrix] of Object.entries(blobs)) {
    const file = `${name}.cbem`;
    writeBlobFile(join(outDir, file), matrix);
    table[name] = { file, rows: matrix.rows, cols: matrix.cols };
  }

  writeFileSync(join(outDir, 'manifest.json'), stableJson({
    format_version: 1,
    dim: encoder.dim,
    class_names: classNames,
    concepts,
    concept_class_map: conceptClassMap,
    task_plan: plan,
    blobs: table,
  }));

  return {
    out: outDir,
    dataset: manifest.dataset,
    encoder: encoder.id,
    classes: classNames.length,
    concepts: concepts.length,
    samples: labels.length,
    tasks: plan.length,
  };
}

import { spawnSync } from 'node:child_process';
import { mkdirSync, mkdtempSync, readFileSync, readdirSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { beforeAll, describe, expect, it } from 'vitest';

import { readBlobFile } from '../src/cbem.js';
import { DatasetError, scanDataset } from '../src/dataset.js';
import { createEncoder } from '../src/encoder.js';
import { extractBundle } from '../src/extract.js';

const CLASSES = ['barn swallow', 'blue jay', 'cardinal'];
const CONCEPTS: Record<string, string[]> = {
  'barn swallow': ['forked tail', 'steel blue back'],
  'blue jay': ['blue crest', 'black collar', 'white chest'],
  'cardinal': ['bright red plumage'],
};

function fakeImage(seed: number): Uint8Array {
  return Uint8Array.from({ length: 200 + seed }, (_, i) => (i * 131 + seed * 17) % 256);
}

function buildDataset(root: string): { dataset: string; concepts: string } {
  const dataset = join(root, 'dataset');
  const concepts = join(root, 'concepts');
  mkdirSync(concepts, { recursive: true });
  CLASSES.forEach((name, c) => {
    for (const [splitName, count] of [['train', 3], ['test', 2]] as const) {
      const dir = join(dataset, splitName, name);
      mkdirSync(dir, { recursive: true });
      for (let i = 0; i < count; i++) {
        writeFileSync(join(dir, `img_${i}.png`), fakeImage(c * 10 + i + (splitName === 'test' ? 100 : 0)));
      }
      writeFileSync(join(dir, 'notes.txt'), 'not an image');
    }
    writeFileSync(join(concepts, `${name}.txt`), CONCEPTS[name].join('\n') + '\n');
  });
  return { dataset, concepts };
}

describe('bundle extraction', () => {
  let root: string;
  let out: string;

  beforeAll(() => {
    root = mkdtempSync(join(tmpdir(), 'extract-'));
    const paths = buildDataset(root);
    out = join(root, 'bundle');
    const manifest = scanDataset(paths.dataset, paths.concepts, 'birds3');
    extractBundle(manifest, createEncoder('hash-48'), out, { tasks: 2 });
  });

  it('writes the five blobs plus manifest.json', () => {
    expect(readdirSync(out).sort()).toEqual([
      'class_name_embeddings.cbem', 'concept_embeddings.cbem', 'images.cbem',
      'labels.cbem', 'manifest.json', 'split.cbem']);
  });

  it('declares a consistent manifest', () => {
    const manifest = JSON.parse(readFileSync(join(out, 'manifest.json'), 'utf-8'));
    expect(Object.keys(manifest).sort()).toEqual([
      'blobs', 'class_names', 'concept_class_map', 'concepts', 'dim',
      'format_version', 'task_plan']);
    expect(manifest.format_version).toBe(1);
    expect(manifest.dim).toBe(48);
    expect(manifest.class_names).toEqual(CLASSES);
    expect(manifest.concepts).toEqual([
      'forked tail', 'steel blue back', 'blue crest', 'black collar',
      'white chest', 'bright red plumage']);
    expect(manifest.concept_class_map).toEqual([0, 0, 1, 1, 1, 2]);
    expect(manifest.task_plan).toEqual([[0, 1], [2]]);
    expect(manifest.blobs['images']).toEqual({ file: 'images.cbem', rows: 15, cols: 48 });
  });

  it('orders rows as train block then test block with class-id labels', () => {
    const labels = readBlobFile(join(out, 'labels.cbem'));
    const split = readBlobFile(join(out, 'split.cbem'));
    expect(labels.cols).toBe(1);
    expect([...labels.data]).toEqual([0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 0, 1, 1, 2, 2]);
    expect([...split.data]).toEqual([0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1]);
  });

  it('keeps every embedding row unit-norm within 1e-4', () => {
    for (const name of ['images', 'class_name_embeddings', 'concept_embeddings']) {
      const m = readBlobFile(join(out, `${name}.cbem`));
      for (let r = 0; r < m.rows; r++) {
        let sq = 0;
        for (let c = 0; c < m.cols; c++) sq += m.data[r * m.cols + c] ** 2;
        expect(Math.abs(Math.sqrt(sq) - 1)).toBeLessThan(1e-4);
      }
    }
  });

  it('re-runs byte-identically', () => {
    const paths = { dataset: join(root, 'dataset'), concepts: join(root, 'concepts') };
    const again = join(root, 'bundle_again');
    const manifest = scanDataset(paths.dataset, paths.concepts, 'birds3');
    extractBundle(manifest, createEncoder('hash-48'), again, { tasks: 2 });
    for (const file of readdirSync(out)) {
      expect(readFileSync(join(again, file))).toEqual(readFileSync(join(out, file)));
    }
  });

  it('passes the training engine ingest validation', () => {
    const probe = spawnSync('python3', ['-m', 'incbm', 'ingest', out],
                            { encoding: 'utf-8' });
    expect(probe.stderr).toBe('');
    expect(probe.status).toBe(0);
    const summary = JSON.parse(probe.stdout);
    expect(summary.classes).toBe(3);
    expect(summary.concepts).toBe(6);
    expect(summary.train).toBe(9);
    expect(summary.test).toBe(6);
    expect(summary.tasks).toBe(2);
  });

  it('supports template-wrapped text encoding', () => {
    const paths = { dataset: join(root, 'dataset'), concepts: join(root, 'concepts') };
    const manifest = scanDataset(paths.dataset, paths.concepts);
    const wrapped = join(root, 'bundle_wrapped');
    extractBundle(manifest, createEncoder('hash-48'), wrapped,
                  { classTemplate: 'a photo of a {text}' });
    const bare = readBlobFile(join(out, 'class_name_embeddings.cbem'));
    const tpl = readBlobFile(join(wrapped, 'class_name_embeddings.cbem'));
    expect([...tpl.data]).not.toEqual([...bare.data]);
    expect(() => extractBundle(manifest, createEncoder('hash-48'),
                               join(root, 'bundle_bad'),
                               { classTemplate: 'no placeholder' }))
      .toThrow(/\{text\} placeholder/);
  });
});

describe('dataset scanning errors', () => {
  it('rejects a class with no test images', () => {
    const root = mkdtempSync(join(tmpdir(), 'extract-'));
    mkdirSync(join(root, 'dataset', 'train', 'lonely'), { recursive: true });
    mkdirSync(join(root, 'dataset', 'test'), { recursive: true });
    mkdirSync(join(root, 'concepts'), { recursive: true });
    writeFileSync(join(root, 'dataset', 'train', 'lonely', 'a.png'), fakeImage(1));
    writeFileSync(join(root, 'concepts', 'lonely.txt'), 'alone\n');
    expect(() => scanDataset(join(root, 'dataset'), join(root, 'concepts')))
      .toThrow(DatasetError);
    expect(() => scanDataset(join(root, 'dataset'), join(root, 'concepts')))
      .toThrow(/no test images/);
  });

  it('rejects a missing or empty concept file', () => {
    const root = mkdtempSync(join(tmpdir(), 'extract-'));
    for (const split of ['train', 'test']) {
      mkdirSync(join(root, 'dataset', split, 'rose'), { recursive: true });
      writeFileSync(join(root, 'dataset', split, 'rose', 'a.png'), fakeImage(2));
    }
    mkdirSync(join(root, 'concepts'), { recursive: true });
    expect(() => scanDataset(join(root, 'dataset'), join(root, 'concepts')))
      .toThrow(/missing concept file/);
    writeFileSync(join(root, 'concepts', 'rose.txt'), '\n  \n');
    expect(() => scanDataset(join(root, 'dataset'), join(root, 'concepts')))
      .toThrow(/empty/);
  });

  it('rejects a dataset without split directories', () => {
    const root = mkdtempSync(join(tmpdir(), 'extract-'));
    mkdirSync(join(root, 'concepts'), { recursive: true });
    expect(() => scanDataset(join(root, 'nope'), join(root, 'concepts')))
      .toThrow(/missing split directory/);
  });
});

/**
 * Dataset scanning: image-folder layout plus one concept file per class.
 *
 * Expected input:
 *
 *   <dataset>/train/<class name>/*.png|jpg|...
 *   <dataset>/test/<class name>/*
 *   <concepts>/<class name>.txt        one concept per line
 *
 * Classes are the sorted union of the two split directories; ids follow
 * that order. Every class must have images in both splits and at least one
 * concept line.
 */
import { existsSync, readdirSync, readFileSync, statSync } from 'node:fs';
import { join } from 'node:path';

export class DatasetError extends Error {}

export interface ClassEntry {
  name: string;
  trainFiles: string[];
  testFiles: string[];
  conceptFile: string;
  concepts: string[];
}

export interface ExtractionManifest {
  dataset: string;
  classes: ClassEntry[];
}

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg', '.bmp', '.gif', '.webp']);

function isImageFile(name: string): boolean {
  const dot = name.lastIndexOf('.');
  return dot >= 0 && IMAGE_EXTENSIONS.has(name.slice(dot).toLowerCase());
}

function listClassDirs(splitDir: string): string[] {
  if (!existsSync(splitDir) || !statSync(splitDir).isDirectory()) {
    throw new DatasetError(`missing split directory ${splitDir}`);
  }
  return readdirSync(splitDir)
    .filter(name => statSync(join(splitDir, name)).isDirectory())
    .sort();
}

function listImages(classDir: string): string[] {
  return readdirSync(classDir)
    .filter(isImageFile)
    .sort()
    .map(name => join(classDir, name));
}

function loadConcepts(path: string): string[] {
  if (!existsSync(path)) {
    throw new DatasetError(`missing concept file ${path}`);
  }
  return readFileSync(path, 'utf-8')
    .split('\n')
    .map(line => line.trim())
    .filter(line => line.length > 0);
}

export function scanDataset(datasetDir: string, conceptsDir: string,
                            datasetName?: string): ExtractionManifest {
  const trainDir = join(datasetDir, 'train');
  const testDir = join(datasetDir, 'test');
  const names = [...new Set([...listClassDirs(trainDir), ...listClassDirs(testDir)])].sort();
  if (names.length === 0) {
    throw new DatasetError(`no class directories under ${datasetDir}`);
  }

  const classes: ClassEntry[] = names.map(name => {
    const trainFiles = existsSync(join(trainDir, name)) ? listImages(join(trainDir, name)) : [];
    const testFiles = existsSync(join(testDir, name)) ? listImages(join(testDir, name)) : [];
    if (trainFiles.length === 0) {
      throw new DatasetError(`class ${JSON.stringify(name)} has no training images`);
    }
    if (testFiles.length === 0) {
      throw new DatasetError(`class ${JSON.stringify(name)} has no test images`);
    }
    const conceptFile = join(conceptsDir, `${name}.txt`);
    const concepts = loadConcepts(conceptFile);
    if (concepts.length === 0) {
      throw new DatasetError(`concept file for class ${JSON.stringify(name)} is empty`);
    }
    return { name, trainFiles, testFiles, conceptFile, concepts };
  });

  return { dataset: datasetName ?? 'dataset', classes };
}

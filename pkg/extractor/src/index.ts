export { BLOB_F32, BLOB_F64, BlobFormatError, MAGIC, decodeBlob, encodeBlob,
         readBlobFile, writeBlobFile, type Matrix } from './cbem.js';
export { DatasetError, scanDataset, type ClassEntry,
         type ExtractionManifest } from './dataset.js';
export { createEncoder, type Encoder } from './encoder.js';
export { extractBundle, type ExtractOptions, type ExtractSummary } from './extract.js';
export { GENERIC_TEMPLATE, PROMPT_TEMPLATES, promptFor, renderPrompt,
         templateKinds } from './templates.js';

/**
 * Prompt templates for LLM concept generation, one per benchmark family.
 *
 * The strings are frozen verbatim, spelling quirks included; downstream
 * concept files were produced from these exact prompts, so "fixing" them
 * would silently change the text fed to the encoder. `{num}` and
 * `{category}` are the caller-side placeholders.
 */

export const PROMPT_TEMPLATES: Readonly<Record<string, string>> = Object.freeze({
  'coarse': 'using {num} sentenses to discribe the appearance / color / size / shape / surroundings of {category}',
  'food101': 'using {num} sentences to describe the apperance / shape / color / texture of a food named {category}',
  'flower': 'using {num} sentences to describe the apperance / color / size / patten / texture of a flower named {category}',
  'stanford-cars': 'using {num} sentences to describe the appearance / shape / color / size / structure of a car named {category}',
});

/** Fallback for dataset kinds without a dedicated prompt. */
export const GENERIC_TEMPLATE =
  'using {num} sentences to describe the appearance / color / size / shape / surroundings of {category}';

const ALIASES: Readonly<Record<string, string>> = Object.freeze({
  'cub200': 'coarse',
  'cub-200': 'coarse',
  'food': 'food101',
  'car': 'stanford-cars',
  'cars': 'stanford-cars',
});

export function templateKinds(): string[] {
  return Object.keys(PROMPT_TEMPLATES);
}

/** The prompt template for a dataset kind; unknown kinds get the generic one. */
export function promptFor(kind: string): string {
  const key = kind.toLowerCase();
  return PROMPT_TEMPLATES[ALIASES[key] ?? key] ?? GENERIC_TEMPLATE;
}

/** Fill a template's placeholders. */
export function renderPrompt(template: string, num: number, category: string): string {
  return template.replaceAll('{num}', String(num)).replaceAll('{category}', category);
}

/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const boundCurve: (a: bigint, b: bigint, c: bigint, d: bigint, e: bigint) => [number, number, number, number];
export const onlineDemo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const sampleDigits: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const varianceCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;

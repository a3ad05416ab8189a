/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_bench_free: (a: number, b: number) => void;
export const __wbg_demoframe_free: (a: number, b: number) => void;
export const bench_frame: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const bench_new: (a: number, b: number) => [number, number, number];
export const bench_rig_json: (a: number, b: number, c: number) => [number, number, number, number];
export const demoframe_psnr: (a: number) => number;
export const demoframe_render_rgba: (a: number) => [number, number];
export const demoframe_size: (a: number) => number;
export const demoframe_ssim: (a: number) => number;
export const demoframe_truth_rgba: (a: number) => [number, number];
export const demoframe_weights: (a: number) => [number, number];
export const weigh: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;

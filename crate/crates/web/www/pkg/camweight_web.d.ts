/* tslint:disable */
/* eslint-disable */

export class Bench {
    free(): void;
    [Symbol.dispose](): void;
    frame(azimuth_deg: number, elevation_deg: number, scheme: string, size: number): DemoFrame;
    constructor(seed: number, sources: number);
    /**
     * The current rig as JSON, for the weighing panel.
     */
    rig_json(azimuth_deg: number, elevation_deg: number): string;
}

export class DemoFrame {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    psnr(): number;
    render_rgba(): Uint8Array;
    size(): number;
    ssim(): number;
    truth_rgba(): Uint8Array;
    weights(): Float64Array;
}

export function weigh(rig_json: string, scheme: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_bench_free: (a: number, b: number) => void;
    readonly __wbg_demoframe_free: (a: number, b: number) => void;
    readonly bench_frame: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly bench_new: (a: number, b: number) => [number, number, number];
    readonly bench_rig_json: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demoframe_psnr: (a: number) => number;
    readonly demoframe_render_rgba: (a: number) => [number, number];
    readonly demoframe_size: (a: number) => number;
    readonly demoframe_ssim: (a: number) => number;
    readonly demoframe_truth_rgba: (a: number) => [number, number];
    readonly demoframe_weights: (a: number) => [number, number];
    readonly weigh: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;

"""Dataset layout, build planning, and parallel augmentation builds.

A dataset lives under one root as ``<category>/<scene>/<name>_rgb.png``
plus ``<name>_depth.png`` (16-bit millimeters), indexed by a
``manifest.json``. Builds are planned deterministically up front: every
output job gets a stable index and a seed derived from (global seed,
job index), so results are identical regardless of worker count, and
coverage-rejected attempts retry with seeds derived from (job, retry).

Two build modes exist: ratio builds augment a sampled fraction of the
source set, and test-set virtualization keeps drawing augmentation
waves over all sources until a target number of accepted images is
reached.
"""

from __future__ import annotations

import json
import math
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assets import get_default_catalog
from .compositing import RgbdPair, audit_composite, check_coverage, composite
from .errors import DatasetError
from .geometry import PinholeCamera
from .pngio import load_depth_png, load_rgb_png, save_depth_png, save_rgb_png
from .render import render_virtual_layer
from .rng import derive_job_seed, derive_retry_seed, derive_stream_seed, make_generator
from .sampling import AugmentationParams, SceneSpec, sample_scene

_TAG_SOURCE_SELECT = 101
_TAG_ASSIGN = 102
_TAG_SYNTH = 900

DEFAULT_HFOV_DEG = 60.0


@dataclass(frozen=True, order=True)
class PairRef:
    """Location of one RGB-D pair inside a dataset root."""

    category: str
    scene: str
    name: str

    @property
    def rel_rgb(self) -> str:
        return f"{self.category}/{self.scene}/{self.name}_rgb.png"

    @property
    def rel_depth(self) -> str:
        return f"{self.category}/{self.scene}/{self.name}_depth.png"

    def to_dict(self) -> dict:
        return {"category": self.category, "scene": self.scene, "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "PairRef":
        return cls(category=d["category"], scene=d["scene"], name=d["name"])


@dataclass
class DatasetManifest:
    """Index of the pairs under a dataset root."""

    root: Path
    pairs: list = field(default_factory=list)

    @staticmethod
    def scan(root) -> "DatasetManifest":
        """Build a manifest by walking the directory tree."""
        root = Path(os.fspath(root))
        pairs = []
        for rgb in sorted(root.glob("*/*/*_rgb.png")):
            name = rgb.name[: -len("_rgb.png")]
            depth = rgb.with_name(f"{name}_depth.png")
            if not depth.exists():
                raise DatasetError(f"missing depth file for {rgb}")
            pairs.append(PairRef(rgb.parent.parent.name, rgb.parent.name, name))
        return DatasetManifest(root=root, pairs=sorted(pairs))

    @staticmethod
    def load(root) -> "DatasetManifest":
        """Read manifest.json, falling back to a directory scan."""
        root = Path(os.fspath(root))
        index = root / "manifest.json"
        if not index.exists():
            return DatasetManifest.scan(root)
        data = json.loads(index.read_text(encoding="utf-8"))
        pairs = sorted(PairRef.from_dict(p) for p in data["pairs"])
        return DatasetManifest(root=root, pairs=pairs)

    def save(self) -> None:
        payload = {"pairs": [p.to_dict() for p in sorted(self.pairs)]}
        (self.root / "manifest.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )

    def __len__(self) -> int:
        return len(self.pairs)

    def load_pair(self, ref: PairRef) -> RgbdPair:
        pair = RgbdPair(
            rgb=load_rgb_png(self.root / ref.rel_rgb),
            depth_mm=load_depth_png(self.root / ref.rel_depth),
        )
        pair.validate()
        return pair


def store_pair(root: Path, ref: PairRef, rgb: np.ndarray, depth_mm: np.ndarray) -> None:
    out_rgb = Path(root) / ref.rel_rgb
    out_rgb.parent.mkdir(parents=True, exist_ok=True)
    save_rgb_png(out_rgb, rgb)
    save_depth_png(Path(root) / ref.rel_depth, depth_mm)


@dataclass(frozen=True)
class JobSpec:
    """One planned augmentation output."""

    job_index: int
    source: PairRef
    out_name: str  # final base name; staging name in virtualization mode
    seed: int


@dataclass
class BuildPlan:
    """Deterministic mapping from job index to source and seed."""

    jobs: list
    global_seed: int
    ratio: float
    source_fraction: float
    source_count: int

    def __len__(self) -> int:
        return len(self.jobs)


def plan_build(manifest: DatasetManifest, ratio: float, source_fraction: float,
               global_seed: int) -> BuildPlan:
    """Plan a ratio build.

    floor(source_fraction * N) sources are drawn without replacement;
    floor(ratio * selected) outputs are assigned sources uniformly with
    replacement. Output names append _aug<k> with k counting repeats of
    the same source in job order.
    """
    if ratio <= 0:
        raise DatasetError("ratio must be positive")
    if not 0 < source_fraction <= 1:
        raise DatasetError("source_fraction must be in (0, 1]")
    refs = sorted(manifest.pairs)
    n = len(refs)
    if n == 0:
        raise DatasetError("source dataset is empty")

    k = int(math.floor(source_fraction * n))
    if k == 0:
        raise DatasetError("source_fraction selects no images")
    sel_rng = make_generator(derive_stream_seed(global_seed, _TAG_SOURCE_SELECT))
    selected_idx = np.sort(sel_rng.permutation(n)[:k])
    selected = [refs[i] for i in selected_idx]

    out_count = int(math.floor(ratio * k))
    assign_rng = make_generator(derive_stream_seed(global_seed, _TAG_ASSIGN))
    assignment = assign_rng.integers(0, k, size=out_count)

    uses: dict = {}
    jobs = []
    for i, src_i in enumerate(assignment):
        src = selected[int(src_i)]
        occ = uses.get(src, 0)
        uses[src] = occ + 1
        jobs.append(JobSpec(
            job_index=i, source=src, out_name=f"{src.name}_aug{occ}",
            seed=derive_job_seed(global_seed, i),
        ))
    return BuildPlan(
        jobs=jobs, global_seed=global_seed, ratio=ratio,
        source_fraction=source_fraction, source_count=k,
    )


@dataclass
class VirtualizePlan:
    """Wave-structured plan for building a fixed-size virtualized set.

    Wave w assigns job index w * n_sources + s to source s, so the
    candidate order interleaves sources evenly; selection in job-index
    order then keeps per-source use counts within one of each other
    even before the optional balanced cap.
    """

    sources: list
    target_count: int
    global_seed: int
    balanced: bool
    max_waves: int

    @property
    def max_uses(self) -> int:
        return math.ceil(self.target_count / len(self.sources))

    def wave_jobs(self, wave: int) -> list:
        n = len(self.sources)
        return [
            JobSpec(
                job_index=wave * n + s, source=self.sources[s],
                out_name=f"job{wave * n + s:08d}",
                seed=derive_job_seed(self.global_seed, wave * n + s),
            )
            for s in range(n)
        ]


def plan_virtualize(manifest: DatasetManifest, target_count: int,
                    global_seed: int, balanced: bool = False) -> VirtualizePlan:
    if target_count <= 0:
        raise DatasetError("target_count must be positive")
    refs = sorted(manifest.pairs)
    if not refs:
        raise DatasetError("source dataset is empty")
    need_waves = math.ceil(target_count / len(refs))
    return VirtualizePlan(
        sources=refs, target_count=target_count, global_seed=global_seed,
        balanced=balanced, max_waves=max(need_waves * 4, need_waves + 2),
    )


def select_accepted(records: list, target_count: int,
                    balanced: bool, max_uses: int) -> list:
    """Pick the records that make the final set, in job-index order.

    ``records`` are dicts with at least job_index/accepted/source keys.
    Balanced mode skips a source once it has max_uses selections.
    """
    uses: dict = {}
    chosen = []
    for rec in sorted(records, key=lambda r: r["job_index"]):
        if not rec["accepted"]:
            continue
        src = rec["source"]
        if balanced and uses.get(src, 0) >= max_uses:
            continue
        uses[src] = uses.get(src, 0) + 1
        chosen.append(rec)
        if len(chosen) == target_count:
            break
    return chosen


def _camera_for(shape) -> PinholeCamera:
    h, w = shape
    return PinholeCamera.from_fov(DEFAULT_HFOV_DEG, width=w, height=h)


def run_augmentation_job(source_root: str, out_root: str, job: JobSpec,
                         params: AugmentationParams, global_seed: int,
                         detail_tier: str, route: str = "raster") -> dict:
    """Render one augmented pair, retrying rejected coverage.

    Writes <category>/<scene>/<out_name>_{rgb,depth}.png plus a
    _scene.json sidecar on acceptance, and returns the job record either
    way. Pure function of its arguments, which is what makes worker
    parallelism invisible in the outputs.
    """
    manifest = DatasetManifest(root=Path(source_root))
    real = manifest.load_pair(job.source)
    camera = _camera_for(real.depth_mm.shape)
    catalog = get_default_catalog(detail_tier)

    record = {
        "job_index": job.job_index,
        "source": job.source.to_dict(),
        "out_name": job.out_name,
        "accepted": False,
        "attempts": 0,
        "coverage": None,
        "seed": None,
    }
    for attempt in range(params.max_cull_retries + 1):
        seed = job.seed if attempt == 0 else derive_retry_seed(
            global_seed, job.job_index, attempt
        )
        spec = sample_scene(seed, params, catalog, camera)
        layer = render_virtual_layer(spec, catalog, real.rgb, route=route)
        aug = composite(real, layer, spec.unit_scale)
        record["attempts"] = attempt + 1
        if check_coverage(aug.coverage, params.coverage_bounds):
            if not audit_composite(real, aug):
                raise DatasetError(
                    f"depth dominance audit failed for job {job.job_index}"
                )
            out_ref = PairRef(job.source.category, job.source.scene, job.out_name)
            store_pair(Path(out_root), out_ref, aug.rgb, aug.depth_mm)
            sidecar = {
                "scene": spec.to_dict(),
                "coverage": aug.coverage,
                "attempt": attempt,
                "source": job.source.to_dict(),
            }
            sidecar_path = Path(out_root) / f"{out_ref.category}/{out_ref.scene}/{out_ref.name}_scene.json"
            sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n",
                                    encoding="utf-8")
            record["accepted"] = True
            record["coverage"] = aug.coverage
            record["seed"] = seed
            return record
    return record


def _job_worker(args) -> dict:
    return run_augmentation_job(*args)


def _run_jobs(job_args: list, jobs: int) -> list:
    if jobs <= 1 or len(job_args) <= 1:
        return [_job_worker(a) for a in job_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(job_args) // (jobs * 4))
        return list(pool.map(_job_worker, job_args, chunksize=chunk))


def _require_fresh_dir(path: Path) -> None:
    if path.exists() and any(path.iterdir()):
        raise DatasetError(f"output directory {path} already contains files")
    path.mkdir(parents=True, exist_ok=True)


@dataclass
class BuildReport:
    """Summary written next to every build's outputs."""

    payload: dict

    def to_json(self) -> str:
        return json.dumps(self.payload, indent=2) + "\n"

    def save(self, root) -> None:
        (Path(root) / "build_report.json").write_text(self.to_json(), encoding="utf-8")

    @staticmethod
    def load(root) -> "BuildReport":
        text = (Path(root) / "build_report.json").read_text(encoding="utf-8")
        return BuildReport(payload=json.loads(text))


def build_dataset(source_root, out_root, params: AugmentationParams,
                  global_seed: int, ratio: float, source_fraction: float = 1.0,
                  jobs: int = 1, detail_tier: str = "standard",
                  config_echo: dict | None = None) -> BuildReport:
    """Ratio build: render floor(ratio * selected_sources) augmented pairs.

    Outputs land under ``out_root`` mirroring source category/scene
    directories, with a manifest and a build report. Identical inputs
    give byte-identical outputs for any ``jobs`` value.
    """
    params.validate()
    source_manifest = DatasetManifest.load(source_root)
    out_root = Path(os.fspath(out_root))
    _require_fresh_dir(out_root)

    plan = plan_build(source_manifest, ratio, source_fraction, global_seed)
    job_args = [
        (str(source_manifest.root), str(out_root), job, params, global_seed,
         detail_tier, "raster")
        for job in plan.jobs
    ]
    records = sorted(_run_jobs(job_args, jobs), key=lambda r: r["job_index"])

    accepted = [r for r in records if r["accepted"]]
    out_pairs = [
        PairRef(r["source"]["category"], r["source"]["scene"], r["out_name"])
        for r in accepted
    ]
    DatasetManifest(root=out_root, pairs=out_pairs).save()

    report = BuildReport(payload={
        "kind": "build",
        "global_seed": global_seed,
        "ratio": ratio,
        "source_fraction": source_fraction,
        "source_count": plan.source_count,
        "planned": len(plan.jobs),
        "accepted": len(accepted),
        "rejected": len(records) - len(accepted),
        "catalog_id": get_default_catalog(detail_tier).catalog_id,
        "params": params.to_dict(),
        "config": config_echo or {},
        "records": records,
    })
    report.save(out_root)
    return report


def virtualize_test_set(source_root, out_root, params: AugmentationParams,
                        global_seed: int, target_count: int,
                        balanced: bool = False, jobs: int = 1,
                        detail_tier: str = "standard",
                        config_echo: dict | None = None) -> BuildReport:
    """Build a fixed-size virtualized copy of a (test) set.

    Augmentation waves run over all sources until ``target_count``
    outputs pass the coverage gate; selection is by job index, with an
    optional per-source cap (balanced mode). Raises DatasetError if the
    wave budget cannot reach the target.
    """
    params.validate()
    source_manifest = DatasetManifest.load(source_root)
    out_root = Path(os.fspath(out_root))
    _require_fresh_dir(out_root)
    stage = out_root / "_stage"
    stage.mkdir()

    plan = plan_virtualize(source_manifest, target_count, global_seed, balanced)
    records: list = []
    selected: list = []
    for wave in range(plan.max_waves):
        wave_jobs = plan.wave_jobs(wave)
        job_args = [
            (str(source_manifest.root), str(stage), job, params, global_seed,
             detail_tier, "raster")
            for job in wave_jobs
        ]
        wave_records = _run_jobs(job_args, jobs)
        for rec, job in zip(sorted(wave_records, key=lambda r: r["job_index"]), wave_jobs):
            rec["source_ref"] = job.source
            records.append(rec)
        selected = select_accepted(
            [{**r, "source": r["source_ref"]} for r in records],
            target_count, balanced, plan.max_uses,
        )
        if len(selected) >= target_count:
            break
    if len(selected) < target_count:
        shutil.rmtree(stage)
        raise DatasetError(
            f"only {len(selected)} of {target_count} outputs accepted within "
            f"{plan.max_waves} waves"
        )

    # Move the selected stage files to their final names, in job order.
    uses: dict = {}
    out_pairs = []
    final_records = []
    for rec in selected:
        src: PairRef = rec["source"]
        occ = uses.get(src, 0)
        uses[src] = occ + 1
        final_name = f"{src.name}_aug{occ}"
        out_ref = PairRef(src.category, src.scene, final_name)
        stage_base = stage / src.category / src.scene / rec["out_name"]
        final_base = out_root / src.category / src.scene / final_name
        final_base.parent.mkdir(parents=True, exist_ok=True)
        for suffix in ("_rgb.png", "_depth.png", "_scene.json"):
            os.replace(f"{stage_base}{suffix}", f"{final_base}{suffix}")
        out_pairs.append(out_ref)
        final_records.append({
            "job_index": rec["job_index"],
            "source": src.to_dict(),
            "out_name": final_name,
            "accepted": True,
            "attempts": rec["attempts"],
            "coverage": rec["coverage"],
            "seed": rec["seed"],
        })
    shutil.rmtree(stage)

    DatasetManifest(root=out_root, pairs=out_pairs).save()
    all_records = [
        {k: v for k, v in r.items() if k != "source_ref"} for r in records
    ]
    report = BuildReport(payload={
        "kind": "virtualize-test",
        "global_seed": global_seed,
        "target_count": target_count,
        "balanced": balanced,
        "source_count": len(plan.sources),
        "waves_run": (len(all_records) // max(len(plan.sources), 1)),
        "planned": len(all_records),
        "accepted": sum(1 for r in all_records if r["accepted"]),
        "selected": len(final_records),
        "catalog_id": get_default_catalog(detail_tier).catalog_id,
        "params": params.to_dict(),
        "config": config_echo or {},
        "selected_records": final_records,
        "records": all_records,
    })
    report.save(out_root)
    return report


def audit_dataset(source_root, aug_root, sample_limit: int | None = None) -> dict:
    """Verify stored outputs against their sources.

    For each augmented pair: depth must never move farther than the
    source reading (dominance), color changes must coincide with depth
    wins, and the sidecar coverage must match a recount of the implied
    replacement mask. Returns counters; raises DatasetError on the
    first violated pair.
    """
    src_manifest = DatasetManifest.load(source_root)
    src_by_ref = {(p.category, p.scene, p.name): p for p in src_manifest.pairs}
    aug_manifest = DatasetManifest.load(aug_root)
    aug_root = Path(os.fspath(aug_root))

    checked = 0
    for ref in sorted(aug_manifest.pairs):
        if sample_limit is not None and checked >= sample_limit:
            break
        sidecar = json.loads(
            (aug_root / ref.category / ref.scene / f"{ref.name}_scene.json")
            .read_text(encoding="utf-8")
        )
        src_key = (
            sidecar["source"]["category"], sidecar["source"]["scene"],
            sidecar["source"]["name"],
        )
        if src_key not in src_by_ref:
            raise DatasetError(f"{ref.name}: source {src_key} not in source manifest")
        real = src_manifest.load_pair(src_by_ref[src_key])
        out_rgb = load_rgb_png(aug_root / ref.rel_rgb)
        out_depth = load_depth_png(aug_root / ref.rel_depth)

        src = real.depth_mm
        farther = (src > 0) & (out_depth > src)
        if farther.any():
            raise DatasetError(f"{ref.name}: depth moved farther than the source")
        implied = ((src == 0) & (out_depth != 0)) | (out_depth < src)
        color_changed = np.any(out_rgb != real.rgb, axis=2)
        if np.any(color_changed & ~implied):
            raise DatasetError(f"{ref.name}: color changed where depth did not win")
        coverage = float(implied.sum()) / float(implied.size)
        if abs(coverage - sidecar["coverage"]) > 1e-12:
            raise DatasetError(
                f"{ref.name}: stored coverage {sidecar['coverage']} != "
                f"recomputed {coverage}"
            )
        checked += 1
    return {"checked": checked}


def make_synthetic_source(root, count: int, seed: int = 0,
                          size: tuple = (480, 640), scenes: int = 4) -> DatasetManifest:
    """Write a small synthetic 'real' RGB-D dataset for demos and tests.

    Color is smooth low-frequency gradients; depth is a smooth surface
    between roughly 2 m and 9 m with a few zero-reading holes, stored as
    16-bit millimeters. Deterministic in (count, seed, size).
    """
    root = Path(os.fspath(root))
    root.mkdir(parents=True, exist_ok=True)
    h, w = size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    ys /= max(h - 1, 1)
    xs /= max(w - 1, 1)

    pairs = []
    for i in range(count):
        rng = make_generator(derive_stream_seed(seed, _TAG_SYNTH + i))
        phases = rng.uniform(0, 2 * np.pi, size=6)
        freqs = rng.uniform(0.5, 2.5, size=6)
        rgb = np.stack([
            0.5 + 0.25 * np.sin(2 * np.pi * freqs[c] * xs + phases[c])
            + 0.25 * np.sin(2 * np.pi * freqs[c + 3] * ys + phases[c + 3])
            for c in range(3)
        ], axis=-1)
        rgb8 = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)

        base = rng.uniform(3.5, 6.5)
        depth_m = (base
                   + 1.8 * np.sin(2 * np.pi * rng.uniform(0.3, 1.0) * xs + rng.uniform(0, 6))
                   + 1.2 * np.sin(2 * np.pi * rng.uniform(0.3, 1.0) * ys + rng.uniform(0, 6)))
        depth_m = np.clip(depth_m, 1.5, 9.5)
        depth_mm = np.rint(depth_m * 1000.0).astype(np.uint16)
        for _ in range(int(rng.integers(1, 4))):
            cy, cx = rng.integers(0, h), rng.integers(0, w)
            r = int(rng.integers(2, max(3, min(h, w) // 12)))
            hole = (ys * (h - 1) - cy) ** 2 + (xs * (w - 1) - cx) ** 2 < r * r
            depth_mm[hole] = 0

        ref = PairRef("synthetic", f"scene{i % scenes:03d}", f"frame{i:05d}")
        store_pair(root, ref, rgb8, depth_mm)
        pairs.append(ref)

    manifest = DatasetManifest(root=root, pairs=sorted(pairs))
    manifest.save()
    return manifest

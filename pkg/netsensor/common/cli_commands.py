"""
Flask CLI Command Extensions

Every pipeline stage is a subcommand of the application's click group.
Each one reads its declared inputs, writes new files into the data
directory together with run_config.json and prints a one-line summary.

Usage: flask <subcommand> [OPTIONS]  or  python -m netsensor <subcommand>
"""
import functools
import json
import sys
from pathlib import Path

import click
import pandas as pd
from flask import current_app

from netsensor import app, config
from netsensor.common import error_handlers, status
from netsensor.geo import NORTH_AMERICA_BBOX, GridSpec, build_affected_area, geocode_profiles, load_gazetteer, load_track
from netsensor.ingest import (
    activity_counts,
    filter_relevance,
    keyword_report as build_keyword_report,
    load_keywords,
    merge_profiles,
    parse_profiles,
    parse_stream,
)
from netsensor.leadtime import (
    activity_vs_entry,
    entry_times,
    lead_time,
    lead_time_sweep,
    null_model_sweep,
    write_sweep_table,
)
from netsensor.models import ArgumentError, CapacityError, DataValidationError, FilterLevel, parse_timestamp
from netsensor.runconfig import RunConfig, read_table, write_json, write_table
from netsensor import pipeline
from netsensor.sampling import GeoCombo, GroupKind, SamplePair, draw_pair, read_groups, write_groups
from netsensor.sensing import detect_with_report, grid_aggregate
from netsensor.sentiment import TrendSeries, align_trends, load_lexicon, score_messages
from netsensor.simulator import SimConfig, simulate

COMBO_CHOICES = [combo.label for combo in GeoCombo]
PRESETS = {
    "default": SimConfig,
    "endogenous": SimConfig.endogenous_dominant,
    "exogenous": SimConfig.exogenous_dominant,
    "sandy": SimConfig.sandy_like,
}


######################################################################
# Helpers
######################################################################
def guarded(func):
    """Turns registered errors into exit statuses"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as error:  # pylint: disable=broad-except
            raise click.exceptions.Exit(error_handlers.handle_error(error)) from error

    return wrapper


def _parse_sizes(ctx, param, value):  # pylint: disable=unused-argument
    try:
        sizes = tuple(int(part) for part in str(value).split(",") if part.strip())
    except ValueError as error:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from error
    if not sizes or any(size < 1 for size in sizes):
        raise click.BadParameter("sizes must be positive integers")
    return sizes


def _parse_epoch(ctx, param, value):  # pylint: disable=unused-argument
    if value is None:
        return None
    try:
        return parse_timestamp(value)
    except (DataValidationError, ValueError) as error:
        raise click.BadParameter(f"invalid instant {value!r}") from error


def _parse_bbox(ctx, param, value):  # pylint: disable=unused-argument
    if value is None:
        return None
    try:
        bbox = tuple(float(part) for part in value.split(","))
    except ValueError as error:
        raise click.BadParameter("expected lat_min,lat_max,lon_min,lon_max") from error
    if len(bbox) != 4:
        raise click.BadParameter("expected lat_min,lat_max,lon_min,lon_max")
    return bbox


def data_dir_option(func):
    """--data-dir: where outputs go and default inputs live"""
    return click.option(
        "--data-dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Data directory (default: NETSENSOR_DATA_DIR)",
    )(func)


def seed_option(func):
    """--seed"""
    return click.option("--seed", type=int, default=0, show_default=True, help="Base random seed")(func)


def epoch_option(func):
    """--epoch"""
    return click.option(
        "--epoch", callback=_parse_epoch, default=None, help="Reference epoch (default: NETSENSOR_EPOCH)"
    )(func)


def _data_dir(value) -> Path:
    directory = Path(value or current_app.config["DATA_DIR"])
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _input(value, directory: Path, name: str) -> Path:
    return Path(value) if value else directory / name


def _optional_input(value, directory: Path, name: str):
    path = _input(value, directory, name)
    return path if path.exists() else None


def _check_outputs(inputs, outputs) -> None:
    """Outputs must never overwrite inputs"""
    sources = {Path(path).resolve() for path in inputs if path}
    for path in outputs:
        if Path(path).resolve() in sources:
            raise ArgumentError(f"Output {path} would overwrite an input; choose another --data-dir")


def _run_config(subcommand: str, params: dict, seed=None, epoch=None) -> RunConfig:
    params = {key: str(value) if isinstance(value, Path) else value for key, value in params.items()}
    reference = epoch.isoformat() if epoch is not None else current_app.config["REFERENCE_EPOCH"]
    return RunConfig(subcommand=subcommand, params=params, seed=seed, reference_epoch=reference)


def _workers(value) -> int:
    return value if value is not None else current_app.config["WORKERS"]


######################################################################
# Ingest
# Usage: flask ingest --input raw.jsonl [--profiles users.jsonl]
######################################################################
@app.cli.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False), help="Raw message stream")
@click.option("--profiles", "profiles_path", type=click.Path(dir_okay=False), help="Profile records")
@click.option("--filter", "filter_level", type=click.Choice([level.value for level in FilterLevel]),
              default=config.FILTER_LEVEL, show_default=True)
@click.option("--keyword-report", is_flag=True, help="Also histogram the extended-dataset keywords")
@click.option("--bin-hours", type=float, default=config.BIN_HOURS, show_default=True)
@click.option("--workers", type=int, default=None)
@epoch_option
@data_dir_option
@guarded
def ingest_command(input_path, profiles_path, filter_level, keyword_report, bin_hours, workers, epoch, data_dir):
    """Parse, deduplicate and relevance-filter a message stream"""
    directory = _data_dir(data_dir)
    run_config = _run_config("ingest", {
        "input": input_path, "profiles": profiles_path, "filter": filter_level,
        "keyword_report": keyword_report, "bin_hours": bin_hours,
    }, epoch=epoch)
    outputs = [directory / pipeline.MESSAGES_FILE, directory / pipeline.PROFILES_FILE]
    _check_outputs([input_path, profiles_path], outputs)

    messages, profiles, report = parse_stream(
        pipeline.read_lines(input_path), epoch=epoch, workers=_workers(workers)
    )
    if profiles_path:
        listed, _ = parse_profiles(pipeline.read_lines(profiles_path), workers=_workers(workers))
        profiles = merge_profiles(profiles, listed)
    if keyword_report:
        rows = [
            (keyword, start, count, together)
            for keyword, histogram in build_keyword_report(messages, load_keywords(), bin_hours).items()
            for start, count, together in zip(histogram.bins, histogram.counts, histogram.with_sandy)
        ]
        write_table(
            directory / "keywords.csv",
            pd.DataFrame(rows, columns=["keyword", "bin_start_h", "count", "with_sandy"]),
            run_config.provenance,
        )
    kept = filter_relevance(messages, filter_level)
    pipeline.write_records(outputs[0], kept)
    pipeline.write_records(outputs[1], profiles)
    write_json(directory / "ingest_report.json",
               {**report.serialize(), "kept": len(kept), "filter": filter_level}, run_config.provenance)
    run_config.save(directory)
    click.echo(
        f"ingest: {report.lines} lines, {report.parsed} messages, {report.malformed} malformed, "
        f"{report.duplicates} duplicates, {len(kept)} kept ({filter_level})"
    )


######################################################################
# Geocode
######################################################################
@app.cli.command("geocode")
@click.option("--profiles", "profiles_path", type=click.Path(dir_okay=False), help="Default: profiles.jsonl")
@click.option("--gazetteer", "gazetteer_path", type=click.Path(dir_okay=False), help="Default: bundled sample")
@click.option("--countries", default=",".join(config.COUNTRIES), show_default=True,
              help="Comma-separated country codes; 'any' keeps every match")
@data_dir_option
@guarded
def geocode_command(profiles_path, gazetteer_path, countries, data_dir):
    """Locate users from device coordinates or self-reported locations"""
    directory = _data_dir(data_dir)
    profiles_path = _input(profiles_path, directory, pipeline.PROFILES_FILE)
    codes = None if countries.strip().lower() == "any" else [code.strip() for code in countries.split(",") if code.strip()]
    run_config = _run_config("geocode", {
        "profiles": profiles_path, "gazetteer": gazetteer_path, "countries": codes,
    })
    located, report = geocode_profiles(pipeline.load_profiles(profiles_path), load_gazetteer(gazetteer_path), codes)
    pipeline.write_located(directory / pipeline.LOCATED_FILE, located, run_config.provenance)
    write_json(directory / "geocode_report.json", report.serialize(), run_config.provenance)
    run_config.save(directory)
    click.echo(
        f"geocode: {report.located} of {report.users} users located ({report.exact} exact, "
        f"{report.centroid} centroid), detection rate {report.detection_rate:.1%}"
    )


######################################################################
# Affected area
######################################################################
@app.cli.command("area")
@click.option("--track", "track_path", required=True, type=click.Path(dir_okay=False), help="Best-track table")
@click.option("--threshold", type=click.Choice(["34", "50", "64"]), default=str(config.THRESHOLD_KT), show_default=True)
@click.option("--arc-segments", type=int, default=config.ARC_SEGMENTS, show_default=True)
@click.option("--quadrant-mode", is_flag=True, help="Use per-quadrant radii instead of the largest one")
@data_dir_option
@guarded
def area_command(track_path, threshold, arc_segments, quadrant_mode, data_dir):
    """Build the affected area from a storm track"""
    directory = _data_dir(data_dir)
    run_config = _run_config("area", {
        "track": track_path, "threshold": int(threshold), "arc_segments": arc_segments,
        "quadrant_mode": quadrant_mode,
    })
    track = load_track(track_path)
    area = build_affected_area(track, int(threshold), arc_segments, quadrant_mode)
    pipeline.write_area(directory / pipeline.AREA_FILE, area, run_config.provenance)
    run_config.save(directory)
    click.echo(f"area: {threshold} kt from {len(track)} track points, {len(area.polygon)} rings")


######################################################################
# Sampling and lead times
######################################################################
def stage_inputs(func):
    """Input file options shared by the sampling stages"""
    for name, default in reversed((
        ("messages", pipeline.MESSAGES_FILE),
        ("edges", pipeline.EDGES_FILE),
        ("located", pipeline.LOCATED_FILE),
        ("area", pipeline.AREA_FILE),
    )):
        func = click.option(f"--{name}", f"{name}_path", type=click.Path(dir_okay=False),
                            help=f"Default: {default} in the data directory")(func)
    return func


def _load_stage(directory, messages_path, edges_path, located_path, area_path, combo, epoch, workers=1):
    messages_path = _input(messages_path, directory, pipeline.MESSAGES_FILE)
    edges_path = _input(edges_path, directory, pipeline.EDGES_FILE)
    located_path = _optional_input(located_path, directory, pipeline.LOCATED_FILE)
    area_path = _optional_input(area_path, directory, pipeline.AREA_FILE)
    if combo is not GeoCombo.ANY and area_path is None:
        raise ArgumentError(f"--combo {combo.label} needs an affected area (--area)")
    messages, inputs = pipeline.load_inputs(
        messages_path, edges_path, located_path, area_path, epoch, workers=workers
    )
    paths = {"messages": messages_path, "edges": edges_path, "located": located_path, "area": area_path}
    return messages, inputs, paths


@app.cli.command("sample")
@click.option("--size", type=int, default=config.SIZES[0], show_default=True)
@click.option("--combo", type=click.Choice(COMBO_CHOICES), default="any", show_default=True)
@stage_inputs
@seed_option
@epoch_option
@data_dir_option
@guarded
def sample_command(size, combo, messages_path, edges_path, located_path, area_path, seed, epoch, data_dir):
    """Draw a control group and its sensor group"""
    directory = _data_dir(data_dir)
    combo = GeoCombo(combo)
    _, inputs, paths = _load_stage(directory, messages_path, edges_path, located_path, area_path, combo, epoch)
    run_config = _run_config("sample", {"size": size, "combo": combo.label, **paths}, seed, epoch)
    pair = draw_pair(inputs.pool, size, inputs.graph, combo, seed, inputs.affected, inputs.eligible)
    write_groups(directory / pipeline.GROUPS_FILE, [pair.control, pair.sensor], run_config.provenance)
    run_config.save(directory)
    click.echo(
        f"sample: {len(pair.control)} control, {len(pair.sensor)} sensor ({combo.label}), "
        f"seed {seed}, {pair.replaced} replaced"
    )


@app.cli.command("leadtime")
@click.option("--groups", "groups_path", type=click.Path(dir_okay=False), help="Default: groups.csv")
@click.option("--messages", "messages_path", type=click.Path(dir_okay=False), help="Default: messages.jsonl")
@click.option("--bandwidth-hours", type=float, default=config.BANDWIDTH_HOURS, show_default=True)
@epoch_option
@data_dir_option
@guarded
def leadtime_command(groups_path, messages_path, bandwidth_hours, epoch, data_dir):
    """Lead time and CDFs of a sampled control/sensor pair"""
    directory = _data_dir(data_dir)
    groups_path = _input(groups_path, directory, pipeline.GROUPS_FILE)
    messages_path = _input(messages_path, directory, pipeline.MESSAGES_FILE)
    groups = {group.kind: group for group in read_groups(groups_path)}
    if set(groups) != {GroupKind.CONTROL, GroupKind.SENSOR}:
        raise DataValidationError(f"{groups_path} must hold one control and one sensor group")
    control, sensor = groups[GroupKind.CONTROL], groups[GroupKind.SENSOR]
    run_config = _run_config("leadtime", {
        "groups": groups_path, "messages": messages_path, "bandwidth_hours": bandwidth_hours,
    }, control.seed, epoch)
    messages = pipeline.load_messages(messages_path, epoch)
    entries = entry_times(messages)
    result = lead_time(control, sensor, entries, activity_counts(messages))
    write_sweep_table(directory / "leadtime.csv", [result], run_config.provenance)
    pipeline.write_cdf_tables(
        directory, SamplePair(control, sensor), entries, messages, bandwidth_hours, run_config.provenance
    )
    run_config.save(directory)
    click.echo(
        f"leadtime: dt = {result.dt:+.2f} h (control {result.mean_tc:+.2f} h, sensor {result.mean_ts:+.2f} h, "
        f"n = {result.sample_size})"
    )


def _sweep(kind, sizes, trials, combo, messages_path, edges_path, located_path, area_path,
           seed, epoch, workers, data_dir):
    directory = _data_dir(data_dir)
    combo = GeoCombo(combo)
    workers = _workers(workers)
    messages, inputs, paths = _load_stage(
        directory, messages_path, edges_path, located_path, area_path, combo, epoch, workers
    )
    run_config = _run_config(kind, {
        "sizes": list(sizes), "trials": trials, "combo": combo.label, **paths,
    }, seed, epoch)
    if kind == "null":
        results = null_model_sweep(messages, sizes, trials, combo, inputs, seed, seed, workers)
    else:
        results = lead_time_sweep(sizes, trials, combo, inputs, seed, workers)
    write_sweep_table(directory / f"{kind}_{combo.value}.csv", results, run_config.provenance)
    run_config.save(directory)
    first = results[0]
    click.echo(
        f"{kind}: {len(results)} sizes x {trials} trials ({combo.label}), "
        f"dt at {first.sample_size} = {first.dt:+.2f} +/- {first.dt_sigma:.2f} h"
    )


def sweep_options(func):
    """Options shared by sweep and null"""
    func = click.option("--workers", type=int, default=None)(func)
    func = click.option("--combo", type=click.Choice(COMBO_CHOICES), default="any", show_default=True)(func)
    func = click.option("--trials", type=click.IntRange(min=2), default=config.TRIALS, show_default=True)(func)
    func = click.option("--sizes", callback=_parse_sizes, default=",".join(map(str, config.SIZES)),
                        show_default=True)(func)
    return func


@app.cli.command("sweep")
@sweep_options
@stage_inputs
@seed_option
@epoch_option
@data_dir_option
@guarded
def sweep_command(sizes, trials, combo, workers, messages_path, edges_path, located_path, area_path,
                  seed, epoch, data_dir):
    """Lead time over sample sizes, averaged over trials"""
    _sweep("sweep", sizes, trials, combo, messages_path, edges_path, located_path, area_path,
           seed, epoch, workers, data_dir)


@app.cli.command("null")
@sweep_options
@stage_inputs
@seed_option
@epoch_option
@data_dir_option
@guarded
def null_command(sizes, trials, combo, workers, messages_path, edges_path, located_path, area_path,
                 seed, epoch, data_dir):
    """Lead-time sweep after shuffling all timestamps"""
    _sweep("null", sizes, trials, combo, messages_path, edges_path, located_path, area_path,
           seed, epoch, workers, data_dir)


######################################################################
# Sentiment
######################################################################
@app.cli.command("sentiment")
@click.option("--messages", "messages_path", type=click.Path(dir_okay=False), help="Default: messages.jsonl")
@click.option("--lexicon", "lexicon_path", type=click.Path(dir_okay=False), help="Default: bundled sample")
@click.option("--normalize", type=click.Choice(["total", "matched"]), default="total", show_default=True)
@click.option("--rescore", is_flag=True, help="Ignore precomputed sentiment in the records")
@epoch_option
@data_dir_option
@guarded
def sentiment_command(messages_path, lexicon_path, normalize, rescore, epoch, data_dir):
    """Score every message with the lexicon"""
    directory = _data_dir(data_dir)
    messages_path = _input(messages_path, directory, pipeline.MESSAGES_FILE)
    located_path = _optional_input(None, directory, pipeline.LOCATED_FILE)
    run_config = _run_config("sentiment", {
        "messages": messages_path, "lexicon": lexicon_path, "normalize": normalize, "rescore": rescore,
    }, epoch=epoch)
    lexicon = load_lexicon(lexicon_path)
    scored = score_messages(pipeline.load_messages(messages_path, epoch), lexicon, normalize, not rescore)
    located = pipeline.load_located(located_path) if located_path else None
    frame = pipeline.scores_frame(scored, located)
    write_table(directory / pipeline.SCORES_FILE, frame, run_config.provenance)
    run_config.save(directory)
    classes = frame["discrete"].value_counts()
    click.echo(
        f"sentiment: {len(frame)} messages scored with {Path(lexicon.name).name}: {classes.get(1, 0)} positive, "
        f"{classes.get(-1, 0)} negative, {classes.get(0, 0)} neutral"
    )


@app.cli.command("trend")
@click.option("--scores", "scores_path", type=click.Path(dir_okay=False), help="Default: scores.csv")
@click.option("--bin-hours", type=float, default=config.BIN_HOURS, show_default=True)
@click.option("--region", type=click.Choice(["any", "in", "out"]), default="any", show_default=True,
              help="Messages inside or outside the affected area; use 'in' to see the landfall crossover")
@click.option("--area", "area_path", type=click.Path(dir_okay=False), help="Default: area.geojson")
@click.option("--reference", "reference_path", type=click.Path(dir_okay=False),
              help="trend.csv of another tool to align against")
@data_dir_option
@guarded
def trend_command(scores_path, bin_hours, region, area_path, reference_path, data_dir):
    """Binned sentiment trend and composition"""
    directory = _data_dir(data_dir)
    scores_path = _input(scores_path, directory, pipeline.SCORES_FILE)
    _check_outputs([scores_path, reference_path], [directory / "trend.csv", directory / "composition.csv"])
    frame = pipeline.load_scores(scores_path)
    if region != "any":
        area_path = _input(area_path, directory, pipeline.AREA_FILE)
        frame = frame[pipeline.region_mask(frame, pipeline.load_area(area_path), region)]
    run_config = _run_config("trend", {
        "scores": scores_path, "bin_hours": bin_hours, "region": region,
        "area": area_path if region != "any" else None, "reference": reference_path,
    })
    series, _, _ = pipeline.write_trend_tables(directory, frame, bin_hours, run_config.provenance)
    if reference_path:
        table = read_table(reference_path)
        reference = TrendSeries(
            bin_hours,
            table["bin_start_h"].astype(float).tolist(),
            [None if value != value else float(value) for value in table["value"]],
            table["count"].astype(int).tolist(),
        )
        alignment = align_trends(reference, series)
        write_json(directory / "alignment.json",
                   {"scale": alignment.scale, "offset": alignment.offset, "residual": alignment.residual},
                   run_config.provenance)
    run_config.save(directory)
    click.echo(f"trend: {len(series)} bins of {bin_hours:g} h from {len(frame)} messages ({region})")


######################################################################
# Sensing
######################################################################
@app.cli.command("sense")
@click.option("--scores", "scores_path", type=click.Path(dir_okay=False), help="Default: scores.csv")
@click.option("--bbox", callback=_parse_bbox, default=None, help="lat_min,lat_max,lon_min,lon_max")
@click.option("--grid-cell-deg", type=float, default=config.GRID_CELL_DEG, show_default=True)
@click.option("--min-count", type=int, default=config.MIN_COUNT, show_default=True)
@click.option("--k-mad", type=float, default=config.K_MAD, show_default=True)
@click.option("--persistence-hours", type=int, default=config.PERSISTENCE_HOURS, show_default=True)
@click.option("--baseline-window-hours", type=int, default=config.BASELINE_WINDOW_HOURS, show_default=True)
@click.option("--require-shift", is_flag=True, help="Also require more negative than positive messages")
@click.option("--per-hour", is_flag=True, help="One GeoJSON file per hour")
@data_dir_option
@guarded
def sense_command(scores_path, bbox, grid_cell_deg, min_count, k_mad, persistence_hours,
                  baseline_window_hours, require_shift, per_hour, data_dir):
    """Hourly grid snapshots and negative-sentiment alerts"""
    directory = _data_dir(data_dir)
    scores_path = _input(scores_path, directory, pipeline.SCORES_FILE)
    grid = GridSpec(*(bbox or NORTH_AMERICA_BBOX), cell_deg=grid_cell_deg)
    run_config = _run_config("sense", {
        "scores": scores_path, "bbox": list(grid.bbox), "grid_cell_deg": grid_cell_deg,
        "min_count": min_count, "k_mad": k_mad, "persistence_hours": persistence_hours,
        "baseline_window_hours": baseline_window_hours, "require_shift": require_shift,
    })
    snapshots, dropped = grid_aggregate(pipeline.score_points(pipeline.load_scores(scores_path)), grid)
    report = detect_with_report(
        snapshots, min_count, k_mad, persistence_hours, baseline_window_hours,
        require_composition_shift=require_shift,
    )
    pipeline.write_sensing_outputs(directory, snapshots, report.alerts, grid, run_config.provenance, per_hour)
    run_config.save(directory)
    click.echo(
        f"sense: {len(snapshots)} hourly snapshots, {len(report.alerts)} alerts, "
        f"{dropped} off-grid messages dropped, {len(report.skipped_cells)} cells without baseline"
    )


######################################################################
# Simulator
######################################################################
@app.cli.command("simulate")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="default", show_default=True)
@click.option("--nodes", type=int, default=None, help="Number of users")
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="JSON file of simulator parameters overriding the preset")
@seed_option
@data_dir_option
@guarded
def simulate_command(preset, nodes, config_path, seed, data_dir):
    """Generate a synthetic graph, users and message stream"""
    directory = _data_dir(data_dir)
    overrides = {}
    if config_path:
        overrides.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
        overrides.pop("provenance", None)
    if nodes is not None:
        overrides["n_nodes"] = nodes
    overrides["seed"] = seed
    sim_config = SimConfig.from_dict({**PRESETS[preset]().to_dict(), **overrides}).validate()
    run_config = _run_config("simulate", {"preset": preset, "config": config_path, **sim_config.to_dict()}, seed)
    output = simulate(sim_config)
    output.write(directory, run_config.provenance)
    run_config.save(directory)
    click.echo(
        f"simulate: {len(output.profiles)} users, {output.graph.number_of_edges()} edges, "
        f"{len(output.truth)} aware, {len(output.messages)} messages"
    )


######################################################################
# Report
######################################################################
@app.cli.command("report")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Default: <data-dir>/report")
@click.option("--lexicon", "lexicon_path", type=click.Path(dir_okay=False), help="Default: bundled sample")
@click.option("--sizes", callback=_parse_sizes, default=",".join(map(str, config.SIZES)), show_default=True)
@click.option("--trials", type=click.IntRange(min=2), default=config.TRIALS, show_default=True)
@click.option("--bin-hours", type=float, default=config.BIN_HOURS, show_default=True)
@click.option("--bandwidth-hours", type=float, default=config.BANDWIDTH_HOURS, show_default=True)
@click.option("--grid-cell-deg", type=float, default=config.GRID_CELL_DEG, show_default=True)
@click.option("--bbox", callback=_parse_bbox, default=None, help="lat_min,lat_max,lon_min,lon_max")
@click.option("--min-count", type=int, default=config.MIN_COUNT, show_default=True)
@click.option("--k-mad", type=float, default=config.K_MAD, show_default=True)
@click.option("--persistence-hours", type=int, default=config.PERSISTENCE_HOURS, show_default=True)
@click.option("--workers", type=int, default=None)
@stage_inputs
@seed_option
@epoch_option
@data_dir_option
@guarded
def report_command(out_dir, lexicon_path, sizes, trials, bin_hours, bandwidth_hours, grid_cell_deg, bbox,
                   min_count, k_mad, persistence_hours, workers, messages_path, edges_path, located_path,
                   area_path, seed, epoch, data_dir):
    """Sweep tables, CDFs, trends, grid snapshots and alerts in one bundle"""
    directory = _data_dir(data_dir)
    out = Path(out_dir) if out_dir else directory / "report"
    out.mkdir(parents=True, exist_ok=True)
    workers = _workers(workers)
    messages, inputs, paths = _load_stage(
        directory, messages_path, edges_path, located_path, area_path, GeoCombo.ANY, epoch, workers
    )
    grid = GridSpec(*(bbox or NORTH_AMERICA_BBOX), cell_deg=grid_cell_deg)
    run_config = _run_config("report", {
        "sizes": list(sizes), "trials": trials, "bin_hours": bin_hours, "bandwidth_hours": bandwidth_hours,
        "grid_cell_deg": grid_cell_deg, "bbox": list(grid.bbox), "min_count": min_count, "k_mad": k_mad,
        "persistence_hours": persistence_hours, "lexicon": lexicon_path, **paths,
    }, seed, epoch)
    provenance = run_config.provenance
    artifacts, skipped = [], {}

    combos = list(GeoCombo) if paths["area"] else [GeoCombo.ANY]
    for combo in combos:
        try:
            results = lead_time_sweep(sizes, trials, combo, inputs, seed, workers)
        except CapacityError as error:
            current_app.logger.warning("Skipping sweep for %s: %s", combo.label, error)
            skipped[f"sweep_{combo.value}"] = str(error)
            continue
        artifacts.append(write_sweep_table(out / f"sweep_{combo.value}.csv", results, provenance))
    try:
        null_results = null_model_sweep(messages, sizes, trials, GeoCombo.ANY, inputs, seed, seed, workers)
        artifacts.append(write_sweep_table(out / "null_any.csv", null_results, provenance))
    except CapacityError as error:
        skipped["null_any"] = str(error)

    try:
        pair = draw_pair(inputs.pool, sizes[0], inputs.graph, GeoCombo.ANY, seed, inputs.affected, inputs.eligible)
        artifacts.extend(pipeline.write_cdf_tables(out, pair, inputs.entry, messages, bandwidth_hours, provenance))
        write_groups(out / pipeline.GROUPS_FILE, [pair.control, pair.sensor], provenance)
        artifacts.append(out / pipeline.GROUPS_FILE)
    except CapacityError as error:
        skipped["cdf"] = str(error)

    degrees = inputs.graph.degrees()
    stages = []
    for stage in ("all", "pre", "post"):
        table = activity_vs_entry(inputs.pool, inputs.entry, inputs.activity, degrees, 24.0, stage)
        table.insert(0, "stage", stage)
        stages.append(table)
    artifacts.append(write_table(out / "activity_vs_entry.csv", pd.concat(stages, ignore_index=True), provenance))

    scored = score_messages(messages, load_lexicon(lexicon_path))
    located = pipeline.load_located(paths["located"]) if paths["located"] else None
    frame = pipeline.scores_frame(scored, located)
    artifacts.append(write_table(out / pipeline.SCORES_FILE, frame, provenance))
    _, _, trend_paths = pipeline.write_trend_tables(out, frame, bin_hours, provenance)
    artifacts.extend(trend_paths)
    if paths["area"]:
        # landfall sign crossover, in-area messages only
        inside = frame[pipeline.region_mask(frame, pipeline.load_area(paths["area"]), "in")]
        _, _, trend_paths = pipeline.write_trend_tables(out, inside, bin_hours, provenance, suffix="_in")
        artifacts.extend(trend_paths)

    snapshots, _ = grid_aggregate(pipeline.score_points(frame), grid)
    alerts = detect_with_report(snapshots, min_count, k_mad, persistence_hours).alerts
    artifacts.extend(pipeline.write_sensing_outputs(out, snapshots, alerts, grid, provenance, per_hour=True))

    artifacts.append(run_config.save(out))
    manifest = pipeline.write_manifest(out, artifacts, provenance, skipped)
    click.echo(f"report: {len(artifacts) + 1} artifacts in {out} ({len(skipped)} skipped)")
    return manifest


######################################################################
# Entry point
######################################################################
def run(argv=None) -> int:
    """Runs one subcommand and returns the exit status"""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        with app.app_context():
            result = app.cli.main(args=argv, prog_name="netsensor", standalone_mode=False)
    except click.UsageError as error:
        return error_handlers.handle_error(error)
    except click.exceptions.Abort:
        return status.EXIT_1_USAGE
    except click.ClickException as error:
        error.show()
        return status.EXIT_1_USAGE
    return result if isinstance(result, int) else status.EXIT_0_OK

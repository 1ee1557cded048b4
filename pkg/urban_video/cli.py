"""Command line entry point.

    urban-video synth --out data
    urban-video rasterize --config experiment.toml
    urban-video train --config experiment.toml --model convlstm --repeats 3
    urban-video params --model cnn --channels 1 --lc 6

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import logging
import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Any, Dict, List, NoReturn  # noqa

import attr
import pandas as pd

from .config import ExperimentSpec, ModelConfig, apply_overrides, load_config
from .dataset import meta_size
from .evaluation import (
    METRICS_COLUMNS,
    evaluate,
    write_case_study_csv,
    write_efficiency_csv,
    write_metrics_csv,
)
from .exceptions import UrbanVideoError, UsageError
from .experiment import (
    BASELINES,
    load_videos,
    predict_samples,
    prepare,
    run_baseline,
    run_model,
    task_names,
)
from .helpers import OutputGuard
from .ingest import (
    calibrate_all,
    clean,
    parse_trajectories,
    read_calibrated,
    write_calibrated,
)
from .log import cli_logger
from .model_nets import MODEL_REGISTRY, build_model
from .model_train import write_history_csv
from .nn_gradcheck import assert_passed, gradcheck_all
from .nn_optim import count_params
from .rasterize import DENSITY, FLOW, build_video, k_anonymize, summarize
from .synthgen import SynthConfig, generate, make_closed_world
from .tensor_io import (
    export_grid_csv,
    orientation_path,
    read_checkpoint,
    read_video,
    write_checkpoint,
    write_video,
)

__all__ = ('main', 'run', 'make_parser', 'COMMANDS')


class _Parser(ArgumentParser):

    def error(self, message: str) -> NoReturn:  # type: ignore
        raise UsageError('%s: %s' % (self.prog, message))


def _common(parser: ArgumentParser) -> None:
    parser.add_argument('--config', type=Path,
                        help='experiment TOML file')
    parser.add_argument('--seed', type=int, help='override the seed')
    parser.add_argument('--out', type=Path, dest='out_dir',
                        help='output directory (default: from config)')
    parser.add_argument('--model', choices=MODEL_REGISTRY.kinds(),
                        help='model kind')
    parser.add_argument('--repeats', type=int,
                        help='training runs per experiment')
    parser.add_argument('--threads', type=int, default=1,
                        help='worker threads (default: %(default)r)')
    parser.add_argument('--channels', type=int,
                        help='1 for density, 2 for in/out flow')
    parser.add_argument('--lc', type=int, dest='l_c',
                        help='closeness window length')
    parser.add_argument('--height', type=int, help='mesh rows, must match a configured mesh')
    parser.add_argument('--width', type=int, help='mesh columns, must match a configured mesh')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='debug logging')


def _spec(args: Namespace) -> ExperimentSpec:
    spec = (load_config(args.config) if args.config is not None
            else ExperimentSpec())
    return apply_overrides(spec, seed=args.seed, out_dir=args.out_dir,
                           model=args.model, repeats=args.repeats,
                           channels=args.channels, l_c=args.l_c,
                           height=args.height, width=args.width)


def cmd_synth(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    try:
        config = SynthConfig(n_objects=args.objects, n_days=args.days,
                             delta_tau=spec.delta_tau, seed=spec.seed,
                             pattern=args.pattern)
        if args.config is not None:
            config = attr.evolve(config, mesh=spec.mesh)
    except ValueError as exc:
        raise UsageError(str(exc))
    text = make_closed_world(config) if args.closed_world \
        else generate(config)
    target = guard.track(args.output or spec.out_dir / 'trajectories.csv')
    target.write_text(text, encoding='utf-8')
    cli_logger.info('Wrote %s', target)
    return 0


def _trajectory_frame(spec: ExperimentSpec) -> Any:
    path, = spec.require('trajectories')
    parsed = parse_trajectories(path.read_bytes())
    if parsed.malformed:
        cli_logger.warning('%d malformed line(s) skipped in %s',
                           parsed.malformed, path)
    return clean(parsed.frame, spec.max_speed)


def cmd_calibrate(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    trajectories = calibrate_all(_trajectory_frame(spec), spec.delta_tau,
                                 workers=args.threads)
    target = guard.track(spec.out_dir / 'calibrated.csv')
    write_calibrated(trajectories, target)
    cli_logger.info('Wrote %d object-days to %s', len(trajectories), target)
    return 0


def cmd_rasterize(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    if spec.paths.trajectories is None and spec.paths.calibrated is not None:
        path, = spec.require('calibrated')
        trajectories = read_calibrated(path, spec.delta_tau)
    else:
        trajectories = calibrate_all(_trajectory_frame(spec),
                                     spec.delta_tau, workers=args.threads)
    for kind in (DENSITY, FLOW):
        video = k_anonymize(build_video(trajectories, spec.mesh, kind,
                                        workers=args.threads),
                            spec.k_anonymity)
        target = guard.track(spec.out_dir / ('%s.vluc' % kind))
        write_video(video, target)
        summary = summarize(video)
        print('%s: T=%d H=%d W=%d C=%d %s .. %s max=%r' % (
            kind, summary.frames, summary.height, summary.width,
            summary.channels, summary.start, summary.end,
            summary.max_value))
    return 0


def cmd_export(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    path, = spec.require(args.kind)
    video = read_video(path)
    if not 0 <= args.channel < video.channels:
        raise UsageError('--channel %d out of range for %d channels' % (
            args.channel, video.channels))
    target = guard.track(spec.out_dir / ('%s_grid.csv' % args.kind))
    guard.track(orientation_path(target))
    lines = export_grid_csv(video, target, channel=args.channel)
    cli_logger.info('Wrote %d grid lines to %s', lines, target)
    return 0


def _prefix(spec: ExperimentSpec) -> Path:
    return spec.out_dir / spec.model.kind


def cmd_train(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    density, flow = load_videos(spec, workers=args.threads)
    prepared = prepare(spec, density, flow)
    result = run_model(spec, prepared)
    prefix = _prefix(spec)
    checkpoint = guard.track(prefix.with_suffix('.ckpt'))
    guard.track(write_checkpoint(result.model.parameters(), checkpoint))
    write_history_csv(result.history,
                      guard.track('%s_history.csv' % prefix))
    rows = [(spec.model.kind, '%s-%s' % (spec.name, task), report)
            for task, report in zip(task_names(prepared), result.metrics)]
    write_metrics_csv(rows, guard.track('%s_metrics.csv' % prefix))
    write_efficiency_csv(
        [(spec.model.kind, spec.name, result.efficiency)],
        guard.track('%s_efficiency.csv' % prefix))
    if result.case_study:
        write_case_study_csv(result.case_study,
                             guard.track('%s_case_study.csv' % prefix))
    return 0


def cmd_evaluate(args: Namespace, guard: OutputGuard) -> int:
    spec = _spec(args)
    density, flow = load_videos(spec, workers=args.threads)
    prepared = prepare(spec, density, flow)
    tasks = task_names(prepared)
    rows = []
    for kind in BASELINES:
        for task, report in zip(tasks, run_baseline(spec, prepared, kind)):
            rows.append((kind, '%s-%s' % (spec.name, task), report))
    checkpoint = args.checkpoint
    if checkpoint is None and _prefix(spec).with_suffix('.ckpt').exists():
        checkpoint = _prefix(spec).with_suffix('.ckpt')
    if checkpoint is not None:
        model = build_model(spec.model, spec.seed)
        model.load_state(read_checkpoint(checkpoint))
        predictions = predict_samples(model, prepared.test,
                                      spec.train.batch_size)
        for task, pred, target, scaler in zip(
                tasks, predictions, prepared.test_targets, prepared.scalers):
            rows.append((spec.model.kind, '%s-%s' % (spec.name, task),
                         evaluate(pred, target, scaler,
                                  threshold=spec.eval.threshold)))
    write_metrics_csv(rows, guard.track(spec.out_dir / 'metrics.csv'))
    for model_name, dataset, report in rows:
        print('%-20s %-20s rmse=%.6g mae=%.6g' % (
            model_name, dataset, report.rmse, report.mae))
    return 0


def cmd_gradcheck(args: Namespace, guard: OutputGuard) -> int:
    results = gradcheck_all(args.seed or 0)
    for result in results:
        print('%-16s %s max_rel_error=%.3g checked=%d skipped=%d' % (
            result.name, 'ok' if result.passed else 'FAIL',
            result.max_error, result.checked, result.skipped))
    assert_passed(results)
    return 0


def cmd_params(args: Namespace, guard: OutputGuard) -> int:
    if args.config is not None:
        config = _spec(args).model
    else:
        config = ModelConfig(kind=args.model or 'cnn',
                             channels=args.channels or 1,
                             l_c=args.l_c or 6,
                             height=args.height or 16,
                             width=args.width or 16,
                             meta_dim=meta_size(48))
    counts = count_params(build_model(config, args.seed or 0))
    if args.verbose:
        print('trainable=%d non_trainable=%d' % (counts.trainable,
                                                 counts.non_trainable))
    print(counts.total)
    return 0


def cmd_report(args: Namespace, guard: OutputGuard) -> int:
    """Collate every metrics and efficiency CSV of the output directory."""
    spec = _spec(args)
    out = spec.out_dir
    metrics = sorted(p for p in out.glob('*metrics.csv'))
    efficiency = sorted(p for p in out.glob('*_efficiency.csv'))
    if not metrics:
        raise UsageError('no metrics CSV under %s' % out)
    table = pd.concat([pd.read_csv(p, keep_default_na=False, dtype=str)
                       for p in metrics], ignore_index=True)
    table = table.drop_duplicates(subset=['model', 'dataset'], keep='last')
    if efficiency:
        eff = pd.concat([pd.read_csv(p, keep_default_na=False, dtype=str)
                         for p in efficiency], ignore_index=True)
        eff = eff.rename(columns={'dataset': '_run'}).drop_duplicates(
            subset=['model', '_run'], keep='last')
        # metrics datasets are <efficiency dataset>-<task>
        table['_run'] = table['dataset'].str.rsplit('-', n=1).str[0]
        table = table.merge(eff, on=['model', '_run'], how='left')
        table = table.drop(columns=['_run']).fillna('NA')
    table = table.sort_values(list(METRICS_COLUMNS[:2]), kind='mergesort')
    target = guard.track(out / 'report.csv')
    table.to_csv(target, index=False, lineterminator='\n')
    print(table.to_string(index=False))
    return 0


COMMANDS = {
    'synth': (cmd_synth, 'generate synthetic trajectory-CSV'),
    'calibrate': (cmd_calibrate, 'write calibrated trajectories'),
    'rasterize': (cmd_rasterize, 'write density and flow videos'),
    'export': (cmd_export, 'write viewer grid-CSV for a video'),
    'train': (cmd_train, 'train a model and write checkpoint and metrics'),
    'evaluate': (cmd_evaluate, 'write test metrics of baselines and model'),
    'gradcheck': (cmd_gradcheck, 'finite-difference gradient verification'),
    'params': (cmd_params, 'print the parameter count of a model'),
    'report': (cmd_report, 'collate metrics and efficiency CSVs'),
}  # type: Dict[str, Any]


def make_parser() -> ArgumentParser:
    parser = _Parser(prog='urban-video',
                     description='Urban video benchmark pipeline')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True
    for name, (func, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        _common(cmd)
        cmd.set_defaults(func=func)
        if name == 'synth':
            cmd.add_argument('--objects', type=int, default=50)
            cmd.add_argument('--days', type=int, default=7)
            cmd.add_argument('--pattern', default='commuting',
                             choices=('commuting', 'stationary'))
            cmd.add_argument('--closed-world', action='store_true',
                             help='one in-mesh record per slot per object')
            cmd.add_argument('--output', type=Path,
                             help='trajectory-CSV path '
                                  '(default: OUT/trajectories.csv)')
        elif name == 'export':
            cmd.add_argument('--kind', default=DENSITY,
                             choices=(DENSITY, FLOW))
            cmd.add_argument('--channel', type=int, default=0)
        elif name == 'evaluate':
            cmd.add_argument('--checkpoint', type=Path)
    return parser


def main(argv: List[str]) -> int:
    """Run one command; errors map to their exit codes."""
    try:
        args = make_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        with OutputGuard() as guard:
            return args.func(args, guard)
    except UrbanVideoError as exc:
        cli_logger.error('%s', exc)
        print('error: %s' % exc, file=sys.stderr)
        return exc.exit_code


def run() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":  # pragma: no branch
    run()  # pragma: no cover

"""
TeraForge command line: degrade, train, eval, infer and compare.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime failure.
"""

import argparse
import json
import sys
import tempfile
import uuid
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from core.exceptions import (
    ConfigurationError, FileOperationError, MisalignedSetsError, TeraForgeException
)
from core.error_diagnostics import ErrorContextManager, ErrorDiagnosticReport
from core.error_logger import get_error_logger, ErrorSeverity
from core.rng import SeededRng
from .run_config import RunConfig, load_run_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

DIAGNOSTIC_REPORT = "diagnostic_report.json"


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=Path, default=None,
                        help='JSON run config (see config/default_settings.json)')
    parser.add_argument('--set', dest='overrides', action='append', default=[],
                        metavar='SECTION.KEY=VALUE',
                        help='Override one config value; repeatable')
    parser.add_argument('--seed', type=int, default=None, help='Run seed (overrides the config)')


def build_parser() -> CliParser:
    parser = CliParser(prog='teraforge',
                       description='Super-resolution for THz images: J-Net training and evaluation')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Echo debug records')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Echo warnings and errors only')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=CliParser)
    sub.required = True

    p = sub.add_parser('degrade', help='Synthesize LR images from a directory of HR images')
    _add_config_args(p)
    p.add_argument('in_dir', type=Path, help='Directory of HR images')
    p.add_argument('out_dir', type=Path, help='Directory for LR images and JSON sidecars')
    p.add_argument('--bit-depth', type=int, choices=(8, 16), default=8,
                   help='Output bit depth (16 needs --channels gray)')
    p.add_argument('--channels', choices=('rgb', 'gray'), default=None,
                   help='Channel mode (default: data.channels)')

    p = sub.add_parser('train', help='Train a network')
    _add_config_args(p)
    p.add_argument('--out-dir', type=Path, default=None, help='Run directory (overrides paths.out_dir)')
    p.add_argument('--resume', action='store_true', help='Continue from the latest checkpoint')
    p.add_argument('--iters', type=int, default=None, help='Total iterations (overrides training.total_iters)')
    p.add_argument('--stop-at', type=int, default=None,
                   help='Stop after this many iterations without changing the schedule')
    p.add_argument('--device', default=None, help='Torch device (overrides training.device)')

    p = sub.add_parser('eval', help='PSNR of a checkpoint on the degraded validation split')
    _add_config_args(p)
    p.add_argument('--checkpoint', type=Path, default=None, help='Checkpoint to evaluate')
    p.add_argument('--val-dir', type=Path, default=None,
                   help='Directory of HR validation images (default: <data.root>/<data.val_split>)')
    p.add_argument('--out-dir', type=Path, default=None, help='Report directory (default: <paths.out_dir>/eval)')
    p.add_argument('--bicubic', action='store_true', help='Also report the bicubic baseline')
    p.add_argument('--ground-truth', action='store_true', help='Also report the HR passthrough')
    p.add_argument('--crop', type=int, default=0, help='Border pixels excluded from PSNR')
    p.add_argument('--device', default='cpu', help='Torch device')

    p = sub.add_parser('infer', help='Super-resolve one image')
    p.add_argument('checkpoint', type=Path, help='Trained checkpoint')
    p.add_argument('image_in', type=Path, help='Input image')
    p.add_argument('image_out', type=Path, help='Output image')
    p.add_argument('--bit-depth', type=int, choices=(8, 16), default=8, help='Output bit depth')
    p.add_argument('--device', default='cpu', help='Torch device')

    p = sub.add_parser('compare', help='Tabulate PSNR of several methods on paired LR/HR directories')
    _add_config_args(p)
    p.add_argument('lr_dir', type=Path, help='Directory of LR images')
    p.add_argument('hr_dir', type=Path, help='Directory of HR images with the same file names')
    p.add_argument('--method', dest='methods', action='append', default=[],
                   metavar='METHOD',
                   help="bicubic, lucy-richardson, model:<checkpoint> or external:[NAME=]<dir>; repeatable")
    p.add_argument('--lr-iters', type=int, default=30, help='Lucy-Richardson iterations')
    p.add_argument('--psf-sigma', type=float, default=None,
                   help='Lucy-Richardson PSF sigma in LR pixels (default: estimated from the degradation config)')
    p.add_argument('--channels', choices=('rgb', 'gray'), default=None,
                   help='Channel mode (default: data.channels)')
    p.add_argument('--out-dir', type=Path, default=None,
                   help='Report directory (default: <paths.out_dir>/compare)')
    p.add_argument('--crop', type=int, default=0, help='Border pixels excluded from PSNR')
    p.add_argument('--device', default='cpu', help='Torch device')
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config, args.overrides)
    if args.seed is not None:
        config.set_seed(args.seed)
    return config


def _ensure_writable(directory: Path):
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=directory, prefix='.teraforge-write-check-'):
            pass
    except OSError as e:
        raise FileOperationError(f"Output directory is not writable: {directory}",
                                 context={'directory': str(directory)}, cause=e)


def cmd_degrade(args: argparse.Namespace) -> int:
    from datapipe.corpus import scan_corpus
    from datapipe.imageio import save_image
    from degradation.model import degrade

    config = _resolve_config(args)
    if args.channels:
        config.data.channels = args.channels
    config.degradation.validate()
    if args.bit_depth == 16 and config.data.channels != 'gray':
        raise ConfigurationError("16-bit output needs --channels gray",
                                 context={'bit_depth': args.bit_depth})
    _ensure_writable(args.out_dir)

    corpus = scan_corpus(args.in_dir, split=None, channels=config.data.channels)
    cfg = config.degradation
    sigmas = []
    for index, record in enumerate(corpus.records):
        hr = corpus.load(index)
        # crop bottom/right so the dims divide by the scale
        height = hr.shape[1] - hr.shape[1] % cfg.scale
        width = hr.shape[2] - hr.shape[2] % cfg.scale
        lr, meta = degrade(hr[:, :height, :width], cfg, SeededRng.derive(config.seed, index))

        stem = record.path.stem
        save_image(args.out_dir / f"{stem}.png", lr, bit_depth=args.bit_depth)
        sidecar = {
            'source': record.name,
            'hr_size': [height, width],
            'seed': config.seed,
            'index': index,
            'degradation': cfg.to_dict(),
            'record': meta.to_dict(),
        }
        try:
            (args.out_dir / f"{stem}.json").write_text(
                json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding='utf-8')
        except OSError as e:
            raise FileOperationError(f"Cannot write sidecar for {record.name}",
                                     context={'path': str(args.out_dir / f'{stem}.json')}, cause=e)
        sigmas.append(meta.sigma)

    print(f"Degraded {len(sigmas)} images (x{cfg.scale}), sigma range "
          f"[{min(sigmas):.4f}, {max(sigmas):.4f}] -> {args.out_dir}")
    for path, reason in corpus.failures:
        print(f"  failed: {path} ({reason})", file=sys.stderr)
    return EXIT_DATA if corpus.failures else EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    from datapipe.corpus import scan_corpus
    from trainer.loop import fit

    config = _resolve_config(args)
    if args.out_dir is not None:
        config.paths.out_dir = str(args.out_dir)
    if args.iters is not None:
        config.training.total_iters = args.iters
    if args.device is not None:
        config.training.device = args.device
    config.validate()

    out_dir = Path(config.paths.out_dir)
    _ensure_writable(out_dir)
    if config.paths.log_file:
        get_error_logger().attach_log_file(out_dir / config.paths.log_file)
    config.save(out_dir / "run_config.json")

    root = Path(config.data.root)
    corpus = scan_corpus(root, config.data.train_split, config.data.channels,
                         min_size=config.data.patch_size)
    corpus.cache_size = config.data.cache_size
    val_corpus = None
    if config.training.val_interval and (root / config.data.val_split).is_dir():
        val_corpus = scan_corpus(root, config.data.val_split, config.data.channels)

    result = fit(corpus, config.network, config.training, config.degradation, config.data,
                 out_dir, val_corpus=val_corpus, resume=args.resume, stop_at=args.stop_at)
    last = result.records[-1] if result.records else None
    summary = f"Stopped at iteration {result.state.iter}/{config.training.total_iters}"
    if last is not None:
        summary += f", loss {last.loss:.6g}"
        if last.val_psnr is not None:
            summary += f", val PSNR {last.val_psnr:.3f} dB"
    print(summary)
    return EXIT_OK


def _fingerprint(config: RunConfig, extra: Optional[Dict] = None) -> Dict:
    fingerprint = {'degradation': config.degradation.to_dict(), 'seed': config.seed}
    fingerprint.update(extra or {})
    return fingerprint


def cmd_eval(args: argparse.Namespace) -> int:
    from datapipe.corpus import scan_corpus
    from datapipe.loader import build_validation_set
    from evalkit.compare import BicubicMethod, GroundTruthMethod, NetworkMethod, compare_methods
    from evalkit.metrics import format_table, write_reports
    from trainer.checkpoint import load_checkpoint

    config = _resolve_config(args)
    if args.checkpoint is None and not args.bicubic and not args.ground_truth:
        raise ConfigurationError("Nothing to evaluate: give --checkpoint, --bicubic or --ground-truth")

    state = None
    if args.checkpoint is not None:
        expected = config.network if (args.config or any(
            o.startswith('network.') for o in args.overrides)) else None
        state = load_checkpoint(args.checkpoint, expected_spec=expected, device=args.device)
        config.network = state.spec
        config.degradation.scale = state.spec.scale
        config.data.channels = 'rgb' if state.spec.in_channels == 3 else 'gray'
    config.validate()

    val_dir = args.val_dir or Path(config.data.root) / config.data.val_split
    out_dir = args.out_dir or Path(config.paths.out_dir) / "eval"
    _ensure_writable(out_dir)

    corpus = scan_corpus(val_dir, split=None, channels=config.data.channels)
    pairs = build_validation_set(corpus, config.degradation, config.data.val_crop,
                                 config.network.scale * config.network.divisor(), config.seed,
                                 config.data.val_limit or None)
    lr_set = [(p.name, p.lr) for p in pairs]
    hr_set = [(p.name, p.hr) for p in pairs]

    methods = []
    if state is not None:
        methods.append(NetworkMethod(state.network, state.spec, name=state.spec.variant,
                                     device=args.device, checkpoint=str(args.checkpoint)))
    if args.bicubic:
        methods.append(BicubicMethod(config.degradation.scale))
    if args.ground_truth:
        methods.append(GroundTruthMethod(hr_set))

    reports = compare_methods(lr_set, hr_set, methods,
                              fingerprint=_fingerprint(config, {'protocol': 'synthetic-val'}),
                              crop=args.crop)
    print(format_table(reports))
    write_reports(reports, out_dir, stem="eval")
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    from datapipe.imageio import load_image, save_image
    from jnet.inference import super_resolve
    from trainer.checkpoint import load_checkpoint

    image = load_image(args.image_in, channels='native')
    state = load_checkpoint(args.checkpoint, device=args.device)
    sr = super_resolve(state.network, state.spec, image, device=args.device)
    if args.bit_depth == 16 and sr.shape[0] != 1:
        raise ConfigurationError("16-bit output is supported for single-channel images only",
                                 context={'bit_depth': args.bit_depth})
    save_image(args.image_out, sr, bit_depth=args.bit_depth)
    print(f"{args.image_in} ({image.shape[1]}x{image.shape[2]}) -> "
          f"{args.image_out} ({sr.shape[1]}x{sr.shape[2]})")
    return EXIT_OK


def parse_method(text: str, config: RunConfig, args: argparse.Namespace):
    """Build an SRMethod from a --method value."""
    from evalkit.compare import BicubicMethod, ExternalMethod, LucyRichardsonMethod, NetworkMethod
    from trainer.checkpoint import load_checkpoint

    scale = config.degradation.scale
    if text == 'bicubic':
        return BicubicMethod(scale)
    if text == 'lucy-richardson':
        sigma = args.psf_sigma if args.psf_sigma is not None else config.degradation.estimated_lr_sigma()
        return LucyRichardsonMethod(scale, sigma, iters=args.lr_iters)
    if text.startswith('model:'):
        path = Path(text[len('model:'):])
        state = load_checkpoint(path, device=args.device)
        if state.spec.scale != scale:
            raise ConfigurationError(
                f"Checkpoint {path.name} is x{state.spec.scale}, comparison is x{scale}",
                context={'checkpoint': str(path), 'scale': scale}
            )
        return NetworkMethod(state.network, state.spec, name=f"{state.spec.variant}:{path.stem}",
                             device=args.device, checkpoint=str(path))
    if text.startswith('external:'):
        spec = text[len('external:'):]
        name, _, directory = spec.rpartition('=')
        directory = Path(directory)
        return ExternalMethod(directory, name=name or None, channels=config.data.channels)
    raise ConfigurationError(f"Unknown method: {text}", context={'method': text})


def _crop_hr_to_lr(lr_set, hr_set, scale: int):
    """Crop each HR bottom/right to scale x its LR, the way degrade trims odd sizes."""
    lr_shapes = {name: lr.shape for name, lr in lr_set}
    cropped = []
    for name, hr in hr_set:
        shape = lr_shapes.get(name)
        if shape is not None:
            height, width = shape[1] * scale, shape[2] * scale
            if 0 <= hr.shape[1] - height < scale and 0 <= hr.shape[2] - width < scale:
                hr = hr[:, :height, :width]
        cropped.append((name, hr))
    return cropped


def cmd_compare(args: argparse.Namespace) -> int:
    from datapipe.corpus import load_named_images
    from evalkit.compare import ExternalMethod, compare_methods
    from evalkit.metrics import format_table, write_reports

    config = _resolve_config(args)
    if args.channels:
        config.data.channels = args.channels
    config.degradation.validate()
    methods_text: List[str] = args.methods or ['bicubic']
    methods = [parse_method(text, config, args) for text in methods_text]

    lr_set = load_named_images(args.lr_dir, config.data.channels)
    hr_set = _crop_hr_to_lr(lr_set, load_named_images(args.hr_dir, config.data.channels),
                            config.degradation.scale)
    names = [name for name, _ in lr_set]
    for method in methods:
        if isinstance(method, ExternalMethod):
            missing = method.missing(names)
            if missing:
                raise MisalignedSetsError(
                    f"{method.name} is missing {len(missing)} SR image(s): {', '.join(missing)}",
                    context={'method': method.name, 'missing': missing}
                )

    out_dir = args.out_dir or Path(config.paths.out_dir) / "compare"
    _ensure_writable(out_dir)
    reports = compare_methods(lr_set, hr_set, methods,
                              fingerprint=_fingerprint(config, {'lr_dir': str(args.lr_dir),
                                                                'hr_dir': str(args.hr_dir)}),
                              crop=args.crop)
    print(format_table(reports))
    write_reports(reports, out_dir, stem="compare")
    return EXIT_OK


COMMANDS = {
    'degrade': cmd_degrade,
    'train': cmd_train,
    'eval': cmd_eval,
    'infer': cmd_infer,
    'compare': cmd_compare,
}


def _report_dir(args: argparse.Namespace) -> Optional[Path]:
    """The directory a failing command may write its diagnostic report into."""
    value = getattr(args, 'out_dir', None)
    return Path(value) if value is not None else None


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logger = get_error_logger()
    logger.set_session_id(str(uuid.uuid4()))
    if args.verbose:
        logger.set_console_level(ErrorSeverity.DEBUG)
    elif args.quiet:
        logger.set_console_level(ErrorSeverity.WARNING)

    try:
        with ErrorContextManager(f"teraforge {args.command}", component="CLI"):
            return COMMANDS[args.command](args)
    except TeraForgeException as e:
        logger.log_exception(e, component="CLI",
                             severity=ErrorSeverity.ERROR if e.exit_code < EXIT_RUNTIME
                             else ErrorSeverity.CRITICAL)
        print(f"error: {e}", file=sys.stderr)
        if e.exit_code == EXIT_RUNTIME:
            _write_diagnostics(args)
        return e.exit_code
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.log_exception(e, component="CLI", severity=ErrorSeverity.FATAL)
        print(f"error: unexpected failure: {e}", file=sys.stderr)
        _write_diagnostics(args)
        return EXIT_RUNTIME
    finally:
        logger.detach_log_file()


def _write_diagnostics(args: argparse.Namespace):
    directory = _report_dir(args)
    if directory is not None and directory.is_dir():
        ErrorDiagnosticReport().generate_report(directory / DIAGNOSTIC_REPORT)


if __name__ == "__main__":
    sys.exit(main())

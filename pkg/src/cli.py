"""
Kemeny 定数解析のコマンドラインツール
行列・辺リストファイルを読み込み、JSON レポートを stdout (または --out) に出力する
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import structlog

from src.config import Config
from src.core.errors import MarkovError, NotIrreducible, NumericalError
from src.core.logging_setup import configure_logging
from src.markov.chain_core import TransitionMatrix, classify, spectrum, stationary, validate_stochastic
from src.markov.ginverse import fundamental_matrix
from src.markov.graph_electric import (
    KirchhoffMethod,
    kirchhoff_all,
    kirkland_mu,
    longest_cycle_length,
    network_from_graph,
    pairwise_resistances,
)
from src.markov.kemeny import ROUTES, analyze_kemeny, kemeny_bounds
from src.markov.mixing import MixingVariant, estimate_mixing_moments, mixing_variance_closed_form
from src.markov.passage import Convention, mfpt_from_ginverse
from src.markov.perturb import (
    Perturbation,
    PerturbationKind,
    apply_perturbation,
    l1_bound_check,
    monotonicity_checks,
    type1_analysis,
    type2_invariance,
)
from src.reports.models import (
    AnalysisReport,
    BoundsSection,
    ClosedFormSection,
    GraphSection,
    KemenySection,
    MixingSection,
    PerturbationSection,
    ResistanceEntry,
    StructureSection,
    dump_report,
)
from src.utils.formats import file_digest, read_edges, read_matrix, read_vector

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1


class UsageError(Exception):
    """コマンドライン引数の誤り (終了コード 1)"""


class UsageParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"整数が必要です: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"1 以上が必要です: {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"数値が必要です: {text!r}")
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"正の値が必要です: {value}")
    return value


def _route_list(text: str) -> List[str]:
    names = [name.strip() for name in text.split(',') if name.strip()]
    unknown = [name for name in names if name not in ROUTES]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"未知の経路: {', '.join(unknown) or text!r} (候補: {', '.join(ROUTES)})"
        )
    return names


def _kirchhoff_list(text: str) -> Optional[List[KirchhoffMethod]]:
    if text == 'all':
        return None
    try:
        return [KirchhoffMethod(name.strip()) for name in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Kirchhoff の方法は a,b,c,d または all です: {text!r}")


def _load_chain(path: str) -> TransitionMatrix:
    P = validate_stochastic(read_matrix(path))
    structure = classify(P)
    if not structure.irreducible:
        raise NotIrreducible("既約な連鎖が必要です", {'path': path})
    return P


def _kemeny_sections(P: TransitionMatrix, args) -> dict:
    structure = classify(P)
    kemeny = analyze_kemeny(P, routes=args.routes, tol=args.tol, seed=args.seed)
    bounds = kemeny_bounds(spectrum(P), structure)
    return {
        'structure': StructureSection(**structure.to_dict()),
        'pi': stationary(P).entries.tolist(),
        'kemeny': KemenySection(
            K=kemeny.K,
            modified_K=kemeny.modified_K,
            spread=kemeny.spread,
            routes=kemeny.routes,
            submatrix_by_state=kemeny.submatrix_by_state,
            surfer_K=kemeny.surfer_K,
        ),
        'bounds': BoundsSection(**bounds.to_dict()),
    }


def cmd_analyze(args) -> AnalysisReport:
    """推移行列を解析する"""
    P = _load_chain(args.matrix)
    report = AnalysisReport(
        command='analyze',
        input_digest=file_digest(args.matrix),
        m=P.m,
        **_kemeny_sections(P, args),
    )
    if args.mfpt:
        pi = stationary(P)
        M = mfpt_from_ginverse(P, pi, fundamental_matrix(P, pi))
        convention = Convention(args.convention)
        report.mfpt_convention = convention.value
        report.mfpt = M.as_convention(convention).entries.tolist()
    return report


def cmd_mix(args) -> AnalysisReport:
    """混合時間をモンテカルロで推定し、閉形式と並べて出力する"""
    P = _load_chain(args.matrix)
    pi = stationary(P)
    variant = MixingVariant(args.variant)
    starts = range(P.m) if args.all_starts else [args.start - 1]

    estimates = [
        estimate_mixing_moments(P, pi, start, variant, args.samples, args.seed, args.shards)
        for start in starts
    ]
    moments = mixing_variance_closed_form(P, pi, fundamental_matrix(P, pi))
    return AnalysisReport(
        command='mix',
        input_digest=file_digest(args.matrix),
        m=P.m,
        pi=pi.entries.tolist(),
        mixing=[MixingSection(**{**estimate.to_dict(), 'start': estimate.start + 1})
                for estimate in estimates],
        closed_form=ClosedFormSection(
            K=moments.K,
            v=moments.v.tolist(),
            eta2=moments.eta2.tolist(),
            alpha_constant=moments.alpha_constant,
        ),
    )


def cmd_graph(args) -> AnalysisReport:
    """辺リストから Kirchhoff 指数・実効抵抗・μ(D) を計算する"""
    g = read_edges(args.edges)
    section = GraphSection(m=g.m, directed=g.directed, edges=g.edge_count)

    if not g.directed:
        section.kirchhoff = kirchhoff_all(g, args.kirchhoff)
        section.resistances = [
            ResistanceEntry(a=a + 1, b=b + 1, R=R)
            for a, b, R in pairwise_resistances(network_from_graph(g))
        ]
    elif args.kirchhoff is not None:
        # 有向グラフに方法を明示した場合は NotUndirected を返す
        kirchhoff_all(g, args.kirchhoff)

    if args.mu:
        section.mu = kirkland_mu(g)
        section.longest_cycle = longest_cycle_length(g)

    return AnalysisReport(
        command='graph',
        input_digest=file_digest(args.edges),
        m=g.m,
        graph=section,
    )


def _build_perturbation(P: TransitionMatrix, args) -> Perturbation:
    kind = PerturbationKind(args.kind)
    if kind is PerturbationKind.DAMPING:
        if args.alpha is None:
            raise UsageError("damping には --alpha が必要です")
        v = read_vector(args.perturbation) if args.perturbation else np.full(P.m, 1.0 / P.m)
        return Perturbation.damping(args.alpha, v)

    if not args.perturbation:
        raise UsageError(f"{kind.value} には摂動ファイルが必要です")
    if kind is PerturbationKind.GENERAL:
        return Perturbation.general(read_matrix(args.perturbation))
    if kind is PerturbationKind.PSD_SUBTRACT:
        return Perturbation.psd_subtract(read_matrix(args.perturbation))
    if kind is PerturbationKind.TYPE1:
        if args.row is None:
            raise UsageError("type1 には --row が必要です")
        return Perturbation.type1(args.row - 1, read_vector(args.perturbation))
    return Perturbation.type2(read_vector(args.perturbation))


def cmd_perturb(args) -> AnalysisReport:
    """摂動を適用して ℓ1 境界と種類ごとの性質を検証する"""
    P = _load_chain(args.matrix)
    pert = _build_perturbation(P, args)
    P_bar = apply_perturbation(P, pert)
    check = l1_bound_check(P, P_bar)

    if pert.kind is PerturbationKind.TYPE1:
        diagnostics = type1_analysis(P, pert.r, pert.h).to_dict()
    elif pert.kind is PerturbationKind.TYPE2:
        diagnostics = type2_invariance(P, pert.h)
    elif pert.kind in (PerturbationKind.PSD_SUBTRACT, PerturbationKind.DAMPING):
        diagnostics = monotonicity_checks(P, pert).to_dict()
    else:
        diagnostics = {}

    parameters = pert.describe()
    parameters.pop('kind')
    if 'r' in parameters:
        parameters['r'] += 1
    if 'r' in diagnostics:
        diagnostics['r'] += 1
        diagnostics['sign_violations'] = [[i + 1, j + 1] for i, j in diagnostics['sign_violations']]

    return AnalysisReport(
        command='perturb',
        input_digest=file_digest(args.matrix),
        m=P.m,
        perturbation=PerturbationSection(
            kind=pert.kind.value,
            parameters=parameters,
            diagnostics=diagnostics,
            **check.to_dict(),
        ),
    )


COMMANDS = {
    'analyze': cmd_analyze,
    'mix': cmd_mix,
    'graph': cmd_graph,
    'perturb': cmd_perturb,
}


def build_parser() -> argparse.ArgumentParser:
    common = UsageParser(add_help=False)
    common.add_argument('--tol', type=_positive_float, default=None,
                        help=f'経路間の許容誤差 (デフォルト: {Config.ROUTE_TOL})')
    common.add_argument('--seed', type=int, default=Config.DEFAULT_SEED,
                        help=f'乱数シード (デフォルト: {Config.DEFAULT_SEED})')
    common.add_argument('--out', '-o', help='レポートの出力先 (省略時は stdout)')
    common.add_argument('--log-level', default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='ログレベル')
    common.add_argument('--log-format', default=None, choices=['console', 'json'], help='ログ形式')

    parser = UsageParser(
        prog='kemeny',
        description="Kemeny 定数とマルコフ連鎖の解析ツール",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用例:
  # 推移行列を解析 (MFPT 行列も出力)
  python scripts/kemeny_cli.py analyze chain.txt --mfpt

  # 混合時間のモンテカルロ推定
  python scripts/kemeny_cli.py mix chain.txt --start 1 --variant return --samples 100000

  # Kirchhoff 指数と μ(D)
  python scripts/kemeny_cli.py graph c4.edges --kirchhoff all

  # Type 2 摂動
  python scripts/kemeny_cli.py perturb chain.txt h.vec --kind type2
        """,
    )
    subparsers = parser.add_subparsers(dest='command', help='利用可能なコマンド')

    analyze = subparsers.add_parser('analyze', parents=[common], help='推移行列を解析')
    analyze.add_argument('matrix', help='行列ファイル')
    analyze.add_argument('--routes', type=_route_list, default=None,
                         help=f'計算する経路 (カンマ区切り: {",".join(ROUTES)})')
    analyze.add_argument('--mfpt', action='store_true', help='MFPT 行列を出力に含める')
    analyze.add_argument('--convention', choices=[c.value for c in Convention],
                         default=Convention.CLASSIC.value, help='MFPT の対角の規約')

    mix = subparsers.add_parser('mix', parents=[common], help='混合時間を推定')
    mix.add_argument('matrix', help='行列ファイル')
    mix.add_argument('--start', type=_positive_int, default=1, help='出発状態 (1 始まり)')
    mix.add_argument('--all-starts', action='store_true', help='すべての出発状態で推定')
    mix.add_argument('--variant', choices=[v.value for v in MixingVariant],
                     default=MixingVariant.RETURN.value, help='混合の判定方法')
    mix.add_argument('--samples', type=_positive_int, default=Config.DEFAULT_SAMPLES,
                     help=f'サンプル数 (デフォルト: {Config.DEFAULT_SAMPLES})')
    mix.add_argument('--shards', type=_positive_int, default=1, help='並列シャード数')

    graph = subparsers.add_parser('graph', parents=[common], help='グラフを解析')
    graph.add_argument('edges', help='辺リストファイル')
    graph.add_argument('--kirchhoff', type=_kirchhoff_list, default=None,
                       help='Kirchhoff 指数の方法 (a,b,c,d または all)')
    graph.add_argument('--mu', action='store_true', help='μ(D) を計算')

    perturb = subparsers.add_parser('perturb', parents=[common], help='摂動を検証')
    perturb.add_argument('matrix', help='行列ファイル')
    perturb.add_argument('perturbation', nargs='?', help='摂動ファイル (行列またはベクトル)')
    perturb.add_argument('--kind', choices=[k.value for k in PerturbationKind],
                         default=PerturbationKind.GENERAL.value, help='摂動の種類')
    perturb.add_argument('--row', type=_positive_int, help='type1 の行 r (1 始まり)')
    perturb.add_argument('--alpha', type=float, help='damping の α')

    return parser


def _emit(report: AnalysisReport, out: Optional[str], tol: Optional[float]) -> None:
    text = dump_report(report.revalidate(tol))
    if out:
        Path(out).write_text(text, encoding='utf-8')
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    """メイン関数 (終了コード: 0 正常, 1 引数, 2 入力検証, 3 数値計算)"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        configure_logging(args.log_level, args.log_format)
        Config.validate()

        if getattr(args, 'samples', 1) < getattr(args, 'shards', 1):
            raise UsageError("--shards は --samples 以下が必要です")

        logger.info("コマンド開始", command=args.command)
        report = COMMANDS[args.command](args)
        _emit(report, args.out, args.tol)
        logger.info("コマンド完了", command=args.command)
        return EXIT_OK

    except UsageError as e:
        print(f"❌ UsageError: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MarkovError as e:
        print(f"❌ {type(e).__name__}: {e.message}", file=sys.stderr)
        return e.exit_code
    except np.linalg.LinAlgError as e:
        print(f"❌ LinAlgError: {e}", file=sys.stderr)
        return NumericalError.exit_code
    except ValueError as e:
        print(f"❌ 設定エラー: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())

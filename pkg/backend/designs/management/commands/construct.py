import logging
import os

from django.conf import settings

from backend.designs.criteria import criterion_value, weights_value
from backend.designs.exact import ALL, BRUTE_FORCE_CAP, DEFAULT_CAP, SUPPORTED, best_exact_design, format_sequence
from backend.designs.exceptions import EnumerationTooLarge, NumericalFailure
from backend.designs.lp import assemble_lp, assemble_lp_blocktrend, solve_vertex
from backend.designs.nuisance import BLOCKTREND
from backend.designs.problem import dense_rows, design_workbook, sparse_rows, write_rows
from backend.designs.resistance import verify_optimality

from ._problem import ProblemCommand

logger = logging.getLogger(__name__)

DEFAULT_LP_SEEDS = 4


class Command(ProblemCommand):
    help = 'Constructs an optimal design of small support and its best exact completion'
    verb = 'construct'

    def add_verb_arguments(self, parser):
        parser.add_argument('--cap', type=int, help='largest number of completions to enumerate')
        parser.add_argument('--candidates', choices=(SUPPORTED, ALL), default=SUPPORTED,
                            help='treatments tried at a free condition')
        parser.add_argument('--lp-seeds', type=int,
                            help='LP objectives whose vertices are completed (default OPTDESIGN_LP_SEEDS)')
        parser.add_argument('--brute-force-cap', type=int,
                            help='search all run orders when there are at most this many')
        parser.add_argument('--no-polish', action='store_true', help='skip the exchange improvement')
        parser.add_argument('--xlsx', action='store_true', help='also write the design as an Excel workbook')
        parser.add_argument('--no-exact', action='store_true', help='skip the exact completion')

    def build_lp(self, context, w_star, seed=None):
        problem = context.problem
        seed = context.seed if seed is None else seed
        if problem.model == BLOCKTREND:
            return assemble_lp_blocktrend(
                problem.blocks, problem.blocksize, problem.degree, context.contrasts, w_star, seed=seed,
            )
        return assemble_lp(context.space, context.contrasts, w_star, objective_seed=seed)

    def vertex_designs(self, context, w_star, first, count):
        "The vertex for the run seed, then those of the following seeds."
        yield context.seed, first
        for seed in range(context.seed + 1, context.seed + count):
            try:
                yield seed, solve_vertex(self.build_lp(context, w_star, seed), tol=context.tolerances).design
            except NumericalFailure as exc:
                logger.warning('LP for objective seed %d failed: %s', seed, exc)

    def run(self, context, options):
        q, crit, tol = context.contrasts, context.criterion, context.tolerances
        w_star = self.optimal_weights(context).weights
        optimum = weights_value(w_star, q, crit)

        lp = self.build_lp(context, w_star)
        solution = solve_vertex(lp, tol=tol)
        xi = solution.design
        check = verify_optimality(xi, q, crit, tol=tol.optimality, w_star=w_star)

        report = {
            'criterion': crit.name,
            'weights': [float(x) for x in w_star],
            'optimal_value': optimum,
            'criterion_value': criterion_value(xi, q, crit),
            'optimal': check.optimal,
            'sufficient_only': check.sufficient_only,
            'seed': context.seed,
            **solution.summary(),
            '_design': xi,
        }
        self.verdict(
            check.optimal,
            f'Approximate design: support {solution.support_size} (bound {solution.support_bound}), '
            f'{"optimal" if check.optimal else "NOT verified optimal"}',
        )

        exact = None
        if not options.get('no_exact'):
            cap = options.get('cap') or getattr(settings, 'OPTDESIGN_ENUMERATION_CAP', DEFAULT_CAP)
            count = options.get('lp_seeds') or getattr(settings, 'OPTDESIGN_LP_SEEDS', DEFAULT_LP_SEEDS)
            brute_force_cap = options.get('brute_force_cap')
            if brute_force_cap is None:
                brute_force_cap = getattr(settings, 'OPTDESIGN_BRUTE_FORCE_CAP', BRUTE_FORCE_CAP)
            try:
                exact = best_exact_design(
                    self.vertex_designs(context, w_star, xi, max(count, 1)), q, crit, optimum,
                    candidate_rule=options['candidates'], cap=cap, brute_force_cap=brute_force_cap,
                    polish=not options.get('no_polish'), tol=tol,
                )
            except EnumerationTooLarge as exc:
                self.stdout.write(self.style.WARNING(f'Exact completion skipped: {exc}'))
        if exact is not None:
            report.update({
                'sequence': format_sequence(exact.sequence, xi.space),
                'efficiency': exact.efficiency,
                'exact_value': exact.value,
                'exact_method': exact.extra.get('method'),
                'exact_source_seed': exact.extra.get('source'),
                'exact_candidates': exact.extra.get('candidates'),
                'exchanges': exact.extra.get('exchanges', 0),
                'fixed_slots': len(exact.slots.fixed) if exact.slots else None,
                'free_slots': len(exact.slots.free) if exact.slots else None,
                'evaluated': exact.evaluated,
                'replication_counts': [int(c) for c in exact.replication_counts()],
            })
            self.stdout.write(f'Exact design: {report["sequence"]}')
            self.stdout.write(self.style.SUCCESS(f'Efficiency {exact.efficiency:.6f}'))

        out_dir = self.out_dir(options, required=True)
        rows = dense_rows(xi)
        write_rows(os.path.join(out_dir, 'design.csv'), rows)
        write_rows(os.path.join(out_dir, 'design_sparse.csv'), sparse_rows(xi))
        if exact is not None:
            with open(os.path.join(out_dir, 'exact.txt'), 'w') as fh:
                fh.write(report['sequence'] + '\n')
        if options.get('xlsx'):
            design_workbook(rows, title=f'{crit.name} design').save(os.path.join(out_dir, 'design.xlsx'))
        self.write_report(report, options, required=True)
        self.stdout.write(self.style.SUCCESS(f'Design files written to {out_dir}'))
        return report

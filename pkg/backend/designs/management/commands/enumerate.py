import os

from django.conf import settings

from backend.designs.criteria import efficiency_ratio
from backend.designs.exact import ALL, DEFAULT_CAP, SUPPORTED, brute_force_exact, enumerate_exact, format_sequence

from ._problem import ProblemCommand


class Command(ProblemCommand):
    help = 'Finds the best exact run order, completing a small-support design or trying every order'
    verb = 'enumerate'

    def add_verb_arguments(self, parser):
        parser.add_argument('--design', help='approximate design CSV whose free conditions are completed')
        parser.add_argument('--candidates', choices=(SUPPORTED, ALL), default=SUPPORTED,
                            help='treatments tried at a free condition')
        parser.add_argument('--no-prune', action='store_true', help='score completions outside the replication band')
        parser.add_argument('--brute-force', action='store_true', help='try all v**n run orders')
        parser.add_argument('--cap', type=int, help='largest number of run orders to score')

    def run(self, context, options):
        q, crit, tol = context.contrasts, context.criterion, context.tolerances
        cap = options.get('cap') or getattr(settings, 'OPTDESIGN_ENUMERATION_CAP', DEFAULT_CAP)
        weights = self.optimal_weights(context)
        if options.get('brute_force'):
            result = brute_force_exact(context.space, q, crit, cap=cap, tol=tol)
            result.efficiency = efficiency_ratio(result.value, weights.value, crit)
        else:
            xi = self.read_design(context, options)
            result = enumerate_exact(
                xi, q, crit, candidate_rule=options['candidates'], optimal_value=weights.value,
                prune=not options.get('no_prune'), cap=cap, tol=tol, w_target=weights.weights,
            )
        sequence = format_sequence(result.sequence, context.space)
        report = {
            'criterion': crit.name,
            'sequence': sequence,
            'value': result.value,
            'optimal_value': weights.value,
            'efficiency': result.efficiency,
            'evaluated': result.evaluated,
            'pruned': result.pruned,
            'replication_counts': [int(c) for c in result.replication_counts()],
            '_design': result.design,
        }
        if result.slots is not None:
            report['fixed_slots'] = len(result.slots.fixed)
            report['free_slots'] = len(result.slots.free)
        self.stdout.write(f'Exact design: {sequence}')
        self.stdout.write(self.style.SUCCESS(f'Efficiency {result.efficiency:.6f} after {result.evaluated} run orders'))
        out_dir = self.write_report(report, options)
        if out_dir:
            with open(os.path.join(out_dir, 'exact.txt'), 'w') as fh:
                fh.write(sequence + '\n')
        return report

from backend.designs.criteria import criterion_value, efficiency_ratio, weights_value
from backend.designs.resistance import verify_optimality

from ._problem import ProblemCommand


class Command(ProblemCommand):
    help = 'Checks whether a design is optimal: optimal proportions and nuisance resistance'
    verb = 'verify'

    def add_verb_arguments(self, parser):
        parser.add_argument('--design', help='design CSV (dense or sparse) or exact sequence file')

    def run(self, context, options):
        q, crit, tol = context.contrasts, context.criterion, context.tolerances
        xi = self.read_design(context, options)
        w_star = self.optimal_weights(context).weights
        check = verify_optimality(xi, q, crit, tol=tol.optimality, w_star=w_star)
        optimum = weights_value(w_star, q, crit)
        value = criterion_value(xi, q, crit)
        report = {
            'criterion': crit.name,
            **check.as_dict(),
            'tolerance': tol.optimality,
            'criterion_value': value,
            'optimal_value': optimum,
            'efficiency': efficiency_ratio(value, optimum, crit),
            'support_size': xi.support_size,
            '_design': xi,
        }
        self.print_report(report)
        if check.optimal:
            self.verdict(True, 'Design is optimal')
        elif check.sufficient_only:
            self.verdict(False, f'Sufficient conditions fail; {crit.name}-optimality is not ruled out')
        else:
            self.verdict(False, 'Design is not optimal')
        self.write_report(report, options)
        return report

from backend.designs.criteria import criterion_value, efficiency_ratio

from ._problem import ProblemCommand


class Command(ProblemCommand):
    help = 'Prints the efficiency of a design relative to the optimal approximate design'
    verb = 'efficiency'

    def add_verb_arguments(self, parser):
        parser.add_argument('--design', help='design CSV (dense or sparse) or exact sequence file')

    def run(self, context, options):
        q, crit = context.contrasts, context.criterion
        xi = self.read_design(context, options)
        optimum = self.optimal_weights(context).value
        value = criterion_value(xi, q, crit)
        report = {
            'criterion': crit.name,
            'criterion_value': value,
            'optimal_value': optimum,
            'efficiency': efficiency_ratio(value, optimum, crit),
            'support_size': xi.support_size,
            '_design': xi,
        }
        self.stdout.write(self.style.SUCCESS(f'{crit.name}-efficiency = {report["efficiency"]:.6f}'))
        self.write_report(report, options)
        return report

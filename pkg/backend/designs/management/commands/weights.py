from backend.designs.contrasts import CONTROLS
from backend.designs.weights import gamma_p

from ._problem import ProblemCommand


def _fmt(values):
    return '(' + ', '.join(f'{x:.6f}' for x in values) + ')'


class Command(ProblemCommand):
    help = 'Prints the optimal treatment proportions and their criterion value'
    verb = 'weights'

    def run(self, context, options):
        q, crit = context.contrasts, context.criterion
        result = self.optimal_weights(context)
        report = {
            'criterion': crit.name,
            'contrast': q.describe(),
            'v': q.v,
            'weights': [float(x) for x in result.weights],
            'value': result.value,
            'method': result.method,
            'iterations': result.iterations,
            'gap': result.gap,
        }
        if q.kind == CONTROLS:
            # MV and A share the optimal control weight
            report['gamma'] = gamma_p(q.v, q.g, -1.0 if crit.is_mv else crit.p).gamma
            report['g'] = q.g
            self.stdout.write(f'gamma = {report["gamma"]:.6f}')
        self.stdout.write(f'w = {_fmt(report["weights"])}')
        self.stdout.write(self.style.SUCCESS(f'{crit.name} value = {result.value:.10g} ({result.method})'))
        self.write_report(report, options)
        return report

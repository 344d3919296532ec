"""Shared plumbing of the design commands.

Not a command itself: Django skips modules whose name starts with an
underscore.
"""
import logging
import os
from dataclasses import dataclass

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from backend.designs.conf import DEFAULT_SEED, Tolerances
from backend.designs.contrasts import KINDS as CONTRAST_KINDS
from backend.designs.exceptions import DesignError, SpecError
from backend.designs.models import DesignRun
from backend.designs.nuisance import MODEL_KINDS
from backend.designs.problem import (
    ProblemSpec, dense_rows, read_design, rows_to_text, to_json_text, write_json,
)
from backend.designs.weights import optimize_weights_detailed

logger = logging.getLogger(__name__)

PROBLEM_FIELDS = (
    'v', 'model', 'n', 'degree', 'blocks', 'blocksize', 'rows', 'cols',
    'nuisance_csv', 'contrast', 'g', 'contrast_csv', 'criterion', 'seed',
)


def public(report):
    "Report without the private entries (the design object) that only the archive reads."
    return {k: v for k, v in report.items() if not k.startswith('_')}


@dataclass
class Context:
    problem: ProblemSpec
    contrasts: object
    criterion: object
    tolerances: Tolerances
    seed: int
    _space: object = None

    @property
    def space(self):
        if self._space is None:
            self._space = self.problem.space()
        return self._space


class ProblemCommand(BaseCommand):
    verb = None

    def add_arguments(self, parser):
        parser.add_argument('--spec', help='JSON problem file; flags override its fields')
        parser.add_argument('--v', type=int, help='number of treatments')
        parser.add_argument('--g', type=int, help='number of controls')
        parser.add_argument('--contrast', choices=CONTRAST_KINDS, help='contrast system (default controls)')
        parser.add_argument('--contrast-csv', help='custom contrast matrix, one row per treatment')
        parser.add_argument('--criterion', help='D, A, E, MV or p=<value <= 0> (default A)')
        parser.add_argument('--model', choices=MODEL_KINDS, help='nuisance model (default none)')
        parser.add_argument('--n', type=int, help='number of time points')
        parser.add_argument('--degree', type=int, help='trend degree')
        parser.add_argument('--blocks', type=int, help='number of blocks')
        parser.add_argument('--blocksize', type=int, help='positions per block')
        parser.add_argument('--rows', type=int, help='rows of a row-column layout')
        parser.add_argument('--cols', type=int, help='columns of a row-column layout')
        parser.add_argument('--nuisance-csv', help='custom regressor table, one row per condition')
        parser.add_argument('--seed', type=int, help='seed for every random choice (default OPTDESIGN_SEED)')
        parser.add_argument('--tol', type=float, help='tolerance of optimality and resistance verdicts')
        parser.add_argument('--out-dir', help='directory for output files')
        parser.add_argument('--archive', action='store_true', help='store the report as a design run')
        self.add_verb_arguments(parser)

    def add_verb_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            context = self.build_context(options)
            report = self.run(context, options)
        except DesignError as exc:
            logger.debug('%s failed', self.verb, exc_info=True)
            raise CommandError(str(exc), returncode=exc.exit_code) from exc
        if options.get('archive') or getattr(settings, 'OPTDESIGN_ARCHIVE_RUNS', False):
            run = self.archive(context, report)
            self.stdout.write(self.style.SUCCESS(f'Archived as design run {run.pk}'))
        return None

    def run(self, context, options):
        raise NotImplementedError

    def problem_from_options(self, options):
        overrides = {name: options.get(name) for name in PROBLEM_FIELDS}
        if options.get('spec'):
            return ProblemSpec.load(options['spec']).with_overrides(**overrides)
        return ProblemSpec.from_dict({k: v for k, v in overrides.items() if v is not None})

    def build_context(self, options):
        problem = self.problem_from_options(options)
        tolerances = problem.tolerance_set(Tolerances.from_settings())
        if options.get('tol') is not None:
            if options['tol'] <= 0:
                raise SpecError(f'--tol must be positive, got {options["tol"]}')
            tolerances = tolerances.replace(optimality=options['tol'], resistance=options['tol'])
        seed = problem.seed
        if seed is None:
            seed = getattr(settings, 'OPTDESIGN_SEED', DEFAULT_SEED)
        contrasts = problem.contrasts()
        return Context(problem, contrasts, problem.get_criterion(), tolerances, int(seed))

    def optimal_weights(self, context):
        return optimize_weights_detailed(context.contrasts, context.criterion, seed=context.seed)

    def read_design(self, context, options):
        if not options.get('design'):
            raise SpecError(f'{self.verb} needs --design')
        return read_design(options['design'], context.space)

    def out_dir(self, options, required=False):
        out_dir = options.get('out_dir')
        if out_dir is None and required:
            out_dir = getattr(settings, 'OPTDESIGN_OUT_DIR', 'designs_out')
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        return out_dir

    def write_report(self, report, options, required=False):
        out_dir = self.out_dir(options, required)
        if out_dir:
            path = os.path.join(out_dir, 'report.json')
            write_json(path, public(report))
            self.stdout.write(f'Report written to {path}')
        return out_dir

    def print_report(self, report):
        self.stdout.write(to_json_text(public(report)))

    def verdict(self, ok, message):
        style = self.style.SUCCESS if ok else self.style.WARNING
        self.stdout.write(style(message))

    def archive(self, context, report):
        design = report.get('_design')
        return DesignRun.objects.create(
            verb=self.verb,
            criterion=context.criterion.name,
            model_kind=context.problem.model,
            problem=context.problem.to_json(),
            report=to_json_text(public(report)),
            design_csv=rows_to_text(dense_rows(design)) if design is not None else '',
            sequence=report.get('sequence') or '',
            support_size=report.get('support_size'),
            efficiency=report.get('efficiency'),
        )

import json

from django.db import models


class DesignRun(models.Model):
    VERB_CHOICES = [
        ('weights', 'Weights'),
        ('construct', 'Construct'),
        ('verify', 'Verify'),
        ('efficiency', 'Efficiency'),
        ('enumerate', 'Enumerate'),
    ]

    verb = models.CharField(max_length=20, choices=VERB_CHOICES, verbose_name="Command")
    criterion = models.CharField(max_length=20, blank=True, verbose_name="Criterion")
    model_kind = models.CharField(max_length=20, blank=True, verbose_name="Nuisance Model")
    problem = models.TextField(verbose_name="Problem (JSON)")
    report = models.TextField(verbose_name="Report (JSON)")
    design_csv = models.TextField(blank=True, verbose_name="Design (CSV)")
    sequence = models.TextField(blank=True, verbose_name="Exact Sequence")
    support_size = models.PositiveIntegerField(null=True, blank=True, verbose_name="Support Size")
    efficiency = models.FloatField(null=True, blank=True, verbose_name="Efficiency")
    created = models.DateTimeField(auto_now_add=True, verbose_name="Created")

    class Meta:
        verbose_name = "Design Run"
        verbose_name_plural = "Design Runs"
        ordering = ['-created']

    def __str__(self):
        return f"{self.verb} {self.criterion} {self.model_kind} - {self.created.strftime('%Y-%m-%d %H:%M')}"

    @property
    def report_data(self):
        return json.loads(self.report or '{}')

    @property
    def problem_data(self):
        return json.loads(self.problem or '{}')

    @property
    def is_optimal(self):
        return self.report_data.get('optimal')

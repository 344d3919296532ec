from django.contrib import admin
from django.utils.html import format_html

from .models import DesignRun


@admin.register(DesignRun)
class DesignRunAdmin(admin.ModelAdmin):
    list_display = [
        'created',
        'verb',
        'criterion',
        'model_kind',
        'support_size',
        'efficiency_display',
        'optimal_display',
    ]
    list_filter = [
        'verb',
        'criterion',
        'model_kind',
        'created',
    ]
    search_fields = [
        'problem',
        'sequence',
    ]
    readonly_fields = [
        'created',
        'optimal_display',
    ]

    fieldsets = (
        ('Run', {
            'fields': ('verb', 'criterion', 'model_kind', 'created')
        }),
        ('Results', {
            'fields': ('support_size', 'efficiency', 'optimal_display', 'sequence')
        }),
        ('Documents', {
            'fields': ('problem', 'report', 'design_csv'),
            'classes': ('collapse',)
        }),
    )

    def efficiency_display(self, obj):
        if obj.efficiency is None:
            return '-'
        return f'{obj.efficiency:.6f}'
    efficiency_display.short_description = 'Efficiency'

    def optimal_display(self, obj):
        optimal = obj.is_optimal
        if optimal is None:
            return '-'
        color = 'green' if optimal else 'red'
        return format_html('<span style="color: {};">{}</span>', color, 'optimal' if optimal else 'not optimal')
    optimal_display.short_description = 'Verdict'

# Generated by Django 4.2.7

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='DesignRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('verb', models.CharField(choices=[('weights', 'Weights'), ('construct', 'Construct'), ('verify', 'Verify'), ('efficiency', 'Efficiency'), ('enumerate', 'Enumerate')], max_length=20, verbose_name='Command')),
                ('criterion', models.CharField(blank=True, max_length=20, verbose_name='Criterion')),
                ('model_kind', models.CharField(blank=True, max_length=20, verbose_name='Nuisance Model')),
                ('problem', models.TextField(verbose_name='Problem (JSON)')),
                ('report', models.TextField(verbose_name='Report (JSON)')),
                ('design_csv', models.TextField(blank=True, verbose_name='Design (CSV)')),
                ('sequence', models.TextField(blank=True, verbose_name='Exact Sequence')),
                ('support_size', models.PositiveIntegerField(blank=True, null=True, verbose_name='Support Size')),
                ('efficiency', models.FloatField(blank=True, null=True, verbose_name='Efficiency')),
                ('created', models.DateTimeField(auto_now_add=True, verbose_name='Created')),
            ],
            options={
                'verbose_name': 'Design Run',
                'verbose_name_plural': 'Design Runs',
                'ordering': ['-created'],
            },
        ),
    ]

# Generated by Django 5.2.6 on 2026-10-19 09:14

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='CampaignManifest',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('config_paths', models.JSONField(default=list)),
                ('output_dir', models.CharField(max_length=500)),
                ('seed', models.IntegerField(default=0)),
                ('jobs', models.PositiveIntegerField(default=1)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('version', models.CharField(max_length=20)),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed'), ('interrupted', 'Interrupted')], default='completed', max_length=20)),
                ('wall_time', models.FloatField(default=0.0)),
                ('created', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created'],
            },
        ),
    ]

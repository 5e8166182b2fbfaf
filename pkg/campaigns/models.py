from django.db import models


class CampaignManifest(models.Model):
    """One invocation of a benchmark command and where its artifacts went."""

    STATUS_CHOICES = [
        ("completed", "Completed"),
        ("failed", "Failed"),
        ("interrupted", "Interrupted"),
    ]

    command = models.CharField(max_length=32)
    config_paths = models.JSONField(default=list)
    output_dir = models.CharField(max_length=500)
    seed = models.IntegerField(default=0)
    jobs = models.PositiveIntegerField(default=1)
    config_hash = models.CharField(max_length=64, blank=True)
    version = models.CharField(max_length=20)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="completed")
    wall_time = models.FloatField(default=0.0)
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created"]

    def __str__(self):
        return f"{self.command} -> {self.output_dir} ({self.status})"

from django.db import models
import uuid


class ExperimentRun(models.Model):
	"""One simulation experiment, recorded or queued from ``manage.py experiment``.

	``process_runs`` picks up pending rows in creation order; the report CSV
	lands at ``report_path`` and failed reps are counted, not fatal.
	"""

	STATUS_PENDING = 'pending'
	STATUS_PROCESSING = 'processing'
	STATUS_DONE = 'done'
	STATUS_FAILED = 'failed'

	STATUS_CHOICES = [
		(STATUS_PENDING, 'Pending'),
		(STATUS_PROCESSING, 'Processing'),
		(STATUS_DONE, 'Done'),
		(STATUS_FAILED, 'Failed'),
	]

	id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
	name = models.CharField(max_length=64, blank=True)
	config = models.JSONField(default=dict)
	jobs = models.PositiveIntegerField(default=1)
	status = models.CharField(max_length=20, choices=STATUS_CHOICES, default=STATUS_PENDING)
	progress = models.IntegerField(default=0)
	report_path = models.CharField(max_length=512, blank=True)
	failures = models.IntegerField(default=0)
	error_message = models.TextField(blank=True)
	created_at = models.DateTimeField(auto_now_add=True)
	updated_at = models.DateTimeField(auto_now=True)

	class Meta:
		ordering = ['created_at']

	def __str__(self) -> str:  # pragma: no cover - trivial
		return f"ExperimentRun({self.id}) {self.name} {self.status}"

	def mark(self, status: str, **fields) -> None:
		self.status = status
		for key, value in fields.items():
			setattr(self, key, value)
		self.save()

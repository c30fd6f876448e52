from dataclasses import dataclass, field


@dataclass
class Report:
    """Outcome of one verification pass.

    ``checked`` counts the instances that were examined; ``failures`` holds
    human readable descriptions of violated instances in discovery order.
    """

    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    max_failures: int = 50

    @property
    def passed(self):
        return not self.failures

    @property
    def counterexample(self):
        return self.failures[0] if self.failures else None

    def fail(self, message):
        if len(self.failures) < self.max_failures:
            self.failures.append(message)
        else:
            self.notes["truncated"] = "yes"

    def expect(self, condition, message):
        self.checked += 1
        if not condition:
            self.fail(message)
        return condition

    def merge(self, other, prefix=None):
        self.checked += other.checked
        for msg in other.failures:
            self.fail(f"{prefix}: {msg}" if prefix else msg)
        for key, value in other.notes.items():
            self.notes.setdefault(key, value)
        return self

    def __str__(self):
        status = "pass" if self.passed else "fail"
        text = f"{self.name}: {status} ({self.checked} checked)"
        if self.failures:
            text += f"; first failure: {self.failures[0]}"
        return text

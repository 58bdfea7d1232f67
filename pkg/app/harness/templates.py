"""
jinja2 templates for the human-readable blocks printed by the CLI and written to summary.txt.
"""
from jinja2 import Template

from app.diagnostics.schemas import DiagnosticsReport
from app.langevin.schemas import StepSizePlan

PLAN_TEMPLATE = Template(
    """regime         = {{ plan.regime.value }}
eta            = {{ "%.10g"|format(plan.eta) }}
k_iterations   = {{ plan.k_iterations }}
epsilon_target = {{ "%.6g"|format(plan.epsilon_target) }}
{% if plan.mu is not none %}mu             = {{ "%.10g"|format(plan.mu) }}
{% endif %}aggressive     = {{ plan.aggressive }}
off_theorem    = {{ plan.off_theorem|lower }}
{% for name, value in plan.constants|dictsort %}const.{{ name }} = {{ "%.10g"|format(value) }}
{% endfor %}{% for name, value in plan.caps|dictsort %}cap.{{ name }} = {{ "%.10g"|format(value) }}{{ "  <- binding" if name == binding else "" }}
{% endfor %}"""
)

DIAGNOSTICS_TEMPLATE = Template(
    """Diagnostics for {{ report.potential }} (n={{ report.n }}, d={{ report.d }})
{% for label, est in estimates %}{% if est is not none %}  {{ label }}: {{ "%.6g"|format(est.estimate) }} +/- {{ "%.3g"|format(est.stderr) }} [{{ est.method }}]{{ " FLAGGED" if est.flagged else "" }}
{% endif %}{% endfor %}  fisher information: {{ report.fisher_information }}
{% for check in report.checks %}  {{ "✓" if check.passed else "✗" }} {{ check.name }}: {{ "%.6g"|format(check.lhs) }} <= {{ "%.6g"|format(check.rhs) }}{% if check.allowance %} + {{ "%.3g"|format(check.allowance) }}{% endif %} (stderr {{ "%.3g"|format(check.stderr) }})
{% endfor %}{% for note in report.notes %}  note: {{ note }}
{% endfor %}"""
)

SUMMARY_TEMPLATE = Template(
    """{{ "=" * 60 }}
Experiment {{ config.potential.name }} / {{ plan.regime.value }} (seed {{ config.master_seed }})
{{ "=" * 60 }}
{{ plan_block }}
{% for block in diagnostics %}{{ block }}
{% endfor %}{% if fit is not none %}bias fit: slope {{ "%.4f"|format(fit.slope) }}, intercept {{ "%.4f"|format(fit.intercept) }}, r2 {{ "%.4f"|format(fit.r2) }} over {{ fit.n_points }} step sizes
{% endif %}{{ "=" * 60 }}
{{ "✓ all checks passed" if passed else "✗ failed: " ~ failed|join(", ") }}
"""
)


def render_plan(plan: StepSizePlan) -> str:
    binding = min(plan.caps, key=plan.caps.get) if plan.caps else None
    return PLAN_TEMPLATE.render(plan=plan, binding=binding)


def render_diagnostics(report: DiagnosticsReport) -> str:
    estimates = [("kl", report.kl), ("tv", report.tv), ("w2", report.w2)]
    return DIAGNOSTICS_TEMPLATE.render(report=report, estimates=estimates)


def render_summary(config, plan: StepSizePlan, reports: list[DiagnosticsReport], fit=None) -> str:
    failed = [name for report in reports for name in report.failed]
    return SUMMARY_TEMPLATE.render(config=config, plan=plan, plan_block=render_plan(plan),
                                   diagnostics=[render_diagnostics(r) for r in reports], fit=fit,
                                   passed=not failed, failed=failed)

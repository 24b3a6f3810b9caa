"""Sample-size audit of SHAP explanations across a Rashomon set of classifiers."""

__version__ = "0.1.0"

"""Bell-type hidden-variable models for two qubits, their psi-epistemic variant,
and statistical audits of free-choice and non-signalling conditions."""

__version__ = "0.1.0"

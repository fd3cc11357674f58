# core/errors.py
"""Error taxonomy of the lab and the handler that turns failures into user messages."""

import logging

debug_logger = logging.getLogger('satotate_debug')


class LabError(Exception):
    """Base class for every numeric failure raised by the core modules."""

    error_type = 'generic_error'

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class DomainError(LabError, ValueError):
    """Argument outside the supported domain of an operation."""

    error_type = 'domain_error'


class KinkError(LabError, ValueError):
    """Derivative of a starred variant requested exactly at its kink."""

    error_type = 'kink_error'


class ConvergenceError(LabError):
    """Quadrature or series did not converge within its refinement budget."""

    error_type = 'convergence_error'


class BracketingError(LabError):
    """The saddle equation has no root inside the reachable range."""

    error_type = 'bracketing_error'


class ConvexityError(LabError):
    """f'' <= 0 was observed: the evaluation broke down numerically."""

    error_type = 'convexity_error'


class DecayError(LabError):
    """The characteristic function did not decay below threshold before the cap."""

    error_type = 'decay_error'


class NonPositiveDensityError(LabError):
    """A log-density was requested where the inverted density is not positive."""

    error_type = 'nonpositive_density'


class BudgetError(LabError):
    """Monte Carlo request exceeds the draw budget."""

    error_type = 'budget_error'


class MethodValidityError(LabError):
    """A tail method was used outside its validity range."""

    error_type = 'method_validity'


# Gestione centralizzata degli errori numerici
class NumericErrorHandler:
    """Classifica gli errori e produce messaggi leggibili per la CLI."""

    ERROR_TYPES = {
        'DOMAIN': DomainError.error_type,
        'KINK': KinkError.error_type,
        'CONVERGENCE': ConvergenceError.error_type,
        'BRACKETING': BracketingError.error_type,
        'CONVEXITY': ConvexityError.error_type,
        'DECAY': DecayError.error_type,
        'NONPOSITIVE_DENSITY': NonPositiveDensityError.error_type,
        'BUDGET': BudgetError.error_type,
        'METHOD_VALIDITY': MethodValidityError.error_type,
        'USAGE': 'usage_error',
        'GENERIC_ERROR': LabError.error_type,
    }

    USER_MESSAGES_IT = {
        'domain_error': "❌ Parametro fuori dal dominio supportato: {detail}",
        'kink_error': "❌ Derivata richiesta esattamente nel punto angoloso: {detail}",
        'convergence_error': "⚠️ La quadratura non converge: {detail}",
        'bracketing_error': "🔍 Nessun punto di sella raggiungibile per questo tau: {detail}",
        'convexity_error': "🔴 Convessità violata (f'' <= 0), valutazione instabile: {detail}",
        'decay_error': "⏳ La funzione caratteristica decade troppo lentamente: {detail}",
        'nonpositive_density': "❌ Densità non positiva in questo punto: {detail}",
        'budget_error': "⚡ Budget Monte Carlo superato: {detail}",
        'method_validity': "⚠️ Metodo di coda non valido in questo regime: {detail}",
        'usage_error': "💡 Uso non corretto: {detail}",
        'generic_error': "⚠️ Errore numerico: {detail}",
    }

    USER_MESSAGES_EN = {
        'domain_error': "❌ Parameter outside the supported domain: {detail}",
        'kink_error': "❌ Derivative requested exactly at the kink: {detail}",
        'convergence_error': "⚠️ Quadrature did not converge: {detail}",
        'bracketing_error': "🔍 No reachable saddle point for this tau: {detail}",
        'convexity_error': "🔴 Convexity violated (f'' <= 0), evaluation unstable: {detail}",
        'decay_error': "⏳ Characteristic function decays too slowly: {detail}",
        'nonpositive_density': "❌ Density is not positive at this point: {detail}",
        'budget_error': "⚡ Monte Carlo budget exceeded: {detail}",
        'method_validity': "⚠️ Tail method not valid in this regime: {detail}",
        'usage_error': "💡 Usage error: {detail}",
        'generic_error': "⚠️ Numeric error: {detail}",
    }

    @staticmethod
    def detect_error_type(error):
        """
        Rileva il tipo di errore a partire dall'eccezione.

        Args:
            error (Exception): eccezione sollevata da un modulo numerico o dalla CLI

        Returns:
            str: uno dei valori di ERROR_TYPES
        """
        if isinstance(error, LabError):
            return error.error_type
        if isinstance(error, (FloatingPointError, ZeroDivisionError, OverflowError)):
            return NumericErrorHandler.ERROR_TYPES['CONVERGENCE']
        if isinstance(error, (ValueError, TypeError)):
            return NumericErrorHandler.ERROR_TYPES['USAGE']
        return NumericErrorHandler.ERROR_TYPES['GENERIC_ERROR']

    @staticmethod
    def get_user_message(error_type, lang='en', detail=''):
        """
        Restituisce il messaggio per l'utente nella lingua scelta.

        Args:
            error_type (str): tipo di errore
            lang (str): 'it' o 'en'
            detail (str): testo dell'eccezione originale

        Returns:
            str: messaggio formattato
        """
        messages = (NumericErrorHandler.USER_MESSAGES_IT if lang == 'it'
                    else NumericErrorHandler.USER_MESSAGES_EN)
        template = messages.get(error_type, messages['generic_error'])
        return template.format(detail=detail)

    @staticmethod
    def exit_code(error):
        """Exit status of the CLI for a failure: 2 for usage errors, 1 otherwise."""
        error_type = NumericErrorHandler.detect_error_type(error)
        if error_type == NumericErrorHandler.ERROR_TYPES['USAGE']:
            return 2
        return 1

    @staticmethod
    def report(error, lang='en'):
        """Log the failure with its details and return the localized message."""
        error_type = NumericErrorHandler.detect_error_type(error)
        details = getattr(error, 'details', {}) or {}
        debug_logger.error(f"❌ {error_type}: {error} | details={details}")
        return NumericErrorHandler.get_user_message(error_type, lang, str(error))

"""Exception hierarchy shared by every module."""


class CookieWalkError(Exception):
    """Base class; ``code`` is the machine-parsable prefix used by the CLI."""

    code = "error"


class DomainError(CookieWalkError, ValueError):
    code = "domain"


class CookieError(CookieWalkError, ValueError):
    """A cookie or stack violates the ellipticity / drift constraints."""

    code = "environment"


class WalkTimeout(CookieWalkError, RuntimeError):
    code = "timeout"


class SiteCapExceeded(CookieWalkError, RuntimeError):
    code = "site-cap"


class InstanceTooLarge(CookieWalkError, ValueError):
    code = "instance-too-large"


class OracleError(CookieWalkError, RuntimeError):
    code = "oracle"


class ConfigError(CookieWalkError, ValueError):
    code = "config"


class Refused(CookieWalkError, ValueError):
    """An experiment declined to run (infinite mean drift, near-critical band)."""

    code = "refused"

'''
Every error the domain raises derives from one of these two roots, so the
entrypoint can map them onto exit statuses without knowing each module.
'''


class ValidationError(ValueError):
    pass


class ConvergenceError(ArithmeticError):
    pass


class FullyDecayed(Exception):
    pass

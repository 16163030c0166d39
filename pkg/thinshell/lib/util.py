import numpy as np

def choice_error_msg(name, value, available):
    msg = f'Invalid {name} "{value}". '
    if len(available) == 1:
        msg += f'Use {available[0]}.'
    else:
        msg += f'Use {", ".join(available[:-1])} or {available[-1]}.'
    return msg

def positive_error_msg(name, value):
    return f'Argument `{name}` must be positive (got {value}).'

def check_positive(**kwargs):
    for name, value in kwargs.items():
        if not np.all(np.asarray(value) > 0):
            raise ValueError(positive_error_msg(name, value))

def mode_error_msg(mode):
    return choice_error_msg('mode', mode, ['harmonic', 'transient'])

def side_error_msg(side):
    return choice_error_msg('side', side, ['+', '-'])

def side_sign(side):
    if side == '+':
        return 1
    elif side == '-':
        return -1
    else:
        raise ValueError(side_error_msg(side))
